//! Batch driver behind the `rabox` binary.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::chains::{check_metric_axioms, exhaustive_box_triples, verify_box_metric, BoxFamily, BoxSpace, Separation};
use crate::coarse::{pullback_fibred, verify_coarse, CoarseMapFamily};
use crate::config::{MapChoice, RunConfig};
use crate::control::DistanceControl;
use crate::error::{Error, Result};
use crate::fibred::{verify_level, FibredCce, SweepOptions};
use crate::hilbert::CndOptions;
use crate::manifest::{CertificateManifest, OracleSpec};
use crate::pipeline::{build_psi, check_limit, forward, limit_psi, BackwardOptions, MeanProvider};
use crate::rational::format as fmt_q;
use crate::report::{CheckRecord, Report};
use crate::Rational;

#[derive(Debug, Parser)]
#[command(name = "rabox", version, about = "Box families, fibred embeddings and Haagerup pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quotient length tables, box-metric checks and the separation table.
    Boxfam(Common),
    /// Cocycle to fibred embedding, verified over the certified scope.
    Forward(Common),
    /// Fibred embedding to ψ tables, CND checks and the pointwise limit.
    Backward(Common),
    /// Re-verifies a certificate manifest written by `forward` or `pullback`.
    VerifyCert {
        #[arg(long, value_name = "PATH")]
        cert: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pulls the forward certificate back along a map family.
    Pullback(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// `uniform` or `foelner:N`.
    #[arg(long)]
    pub mean: Option<MeanProvider>,
}

impl Common {
    fn load(&self, required: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None if required => return Err(Error::Config("--config is required".into())),
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(m) = self.mean {
            cfg.mean = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` and runs; returns the process exit code: 0 when every
/// check passed, 1 when some check failed, 2 on errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            println!(
                "{}: {} ({} checks, {} failed)",
                report.command,
                if report.passed() { "PASS" } else { "FAIL" },
                report.summary.checks,
                report.summary.failed
            );
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report> {
    let (common, report) = match &cli.command {
        Command::Boxfam(c) => (c, cmd_boxfam(&c.load(true)?, &c.out)?),
        Command::Forward(c) => (c, cmd_forward(&c.load(true)?, &c.out)?),
        Command::Backward(c) => (c, cmd_backward(&c.load(true)?, &c.out)?),
        Command::VerifyCert { cert, common } => (common, cmd_verify_cert(&common.load(false)?, cert)?),
        Command::Pullback(c) => (c, cmd_pullback(&c.load(true)?, &c.out)?),
    };
    write_text(&common.out, "report.json", &report.to_json()?)?;
    Ok(report)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

#[derive(Serialize)]
struct ComponentRow {
    component: u32,
    quotient: String,
    order: String,
    diameter: String,
    bounded: bool,
    amenability: String,
    separation: String,
}

#[derive(Serialize)]
struct CosetRow {
    component: u32,
    coset: String,
    length: u32,
}

#[derive(Serialize)]
struct SeparationRow {
    n: u32,
    m: u32,
    separation: u64,
}

/// Finite components larger than this are listed on the `boxfam_radius` ball only.
const LIST_WHOLE_COMPONENT: u64 = 4096;
const EXHAUSTIVE_TRIPLE_POINTS: usize = 120;

pub fn cmd_boxfam(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut report = Report::new("boxfam", cfg.seed, cfg.canonical());
    let chain = cfg.build_chain()?;
    let family = cfg.build_family(&chain)?;
    let space = BoxSpace::new(family.clone());

    let mut components = Vec::new();
    let mut cosets = Vec::new();
    let mut length_mismatches = Vec::new();
    for &n in family.levels() {
        let q = family.component(n)?;
        let order = q.group.order();
        components.push(ComponentRow {
            component: n,
            quotient: q.group.spec().to_string(),
            order: order.map(|o| o.to_string()).unwrap_or_else(|| "infinite".into()),
            diameter: q.group.diameter()?.map(|d| d.to_string()).unwrap_or_else(|| "unbounded".into()),
            bounded: q.is_bounded(),
            amenability: match chain.amenability_witness(n)? {
                crate::chains::AmenabilityWitness::Finite => "finite".into(),
                crate::chains::AmenabilityWitness::FoelnerBoxes => "foelner-boxes".into(),
            },
            separation: match chain.separation(n)? {
                Separation::Radius(r) => r.to_string(),
                Separation::AtLeast(r) => format!(">={r}"),
                Separation::Unbounded => "unbounded".into(),
            },
        });
        let points = match order {
            Some(o) if o <= LIST_WHOLE_COMPONENT => q.group.elements()?,
            _ => q.group.ball(cfg.boxfam_radius)?,
        };
        for x in &points {
            cosets.push(CosetRow { component: n, coset: x.to_string(), length: q.length(x)? });
        }
        for g in chain.group().ball(cfg.boxfam_radius)? {
            let via_chain = chain.quotient_length(n, &g)?;
            let via_quotient = q.length(&chain.project(n, &g)?)?;
            if via_chain != via_quotient {
                length_mismatches.push(format!("level {n}: {g} has {via_chain} vs {via_quotient}"));
            }
        }
    }
    report.push(
        CheckRecord::new("quotient-length", "box-family/quotient-length", length_mismatches.is_empty())
            .number("radius", cfg.boxfam_radius)
            .witnesses(length_mismatches.into_iter().take(8)),
    );

    let small: Vec<u32> = family.levels().iter().copied().filter(|&n| n <= 4).collect();
    let pts = exhaustive_box_triples(&space, cfg.boxfam_radius, 4)?;
    if !small.is_empty() && pts.len() <= EXHAUSTIVE_TRIPLE_POINTS {
        let p = &pts;
        let triples =
            p.iter().flat_map(|a| p.iter().flat_map(move |b| p.iter().map(move |c| (a.clone(), b.clone(), c.clone()))));
        let m = check_metric_axioms(&space, triples)?;
        report.push(
            CheckRecord::new("box-metric-exhaustive", "box-space/metric", m.passed())
                .number("triples", m.triples_checked)
                .witnesses(m.violations.iter().take(8)),
        );
    }
    let m = verify_box_metric(&space, cfg.metric_samples, cfg.seed, cfg.boxfam_radius)?;
    report.push(
        CheckRecord::new("box-metric-sampled", "box-space/metric", m.passed())
            .number("triples", m.triples_checked)
            .witnesses(m.violations.iter().take(8)),
    );

    let mut seps = Vec::new();
    let mut bad = Vec::new();
    for &n in family.levels() {
        for &m in family.levels() {
            if n != m {
                let s = space.component_separation(n, m)?;
                if s != (n + m) as u64 {
                    bad.push(format!("({n}, {m}) -> {s}"));
                }
                seps.push(SeparationRow { n, m, separation: s });
            }
        }
    }
    report.push(
        CheckRecord::new("component-separation", "box-space/separation", bad.is_empty())
            .number("pairs", seps.len())
            .witnesses(bad),
    );

    write_csv(out, "components.csv", &components)?;
    write_csv(out, "boxfam.csv", &cosets)?;
    write_csv(out, "separation.csv", &seps)?;
    Ok(report)
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        exhaustive_limit: cfg.exhaustive_limit,
        samples: cfg.samples,
        literal_pairs: cfg.literal_pairs,
        seed: cfg.seed,
        ..SweepOptions::default()
    }
}

/// Structure invariants and both conditions at every radius in scope.
pub fn certificate_checks(emb: &FibredCce, cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let threshold = Rational::from_integer(cfg.threshold as i64);
    let s = emb.structure(threshold * threshold);
    report.push(
        CheckRecord::new("structure", "fibred-cce/structure", s.passed())
            .number("max_r", emb.max_r)
            .number("threshold", cfg.threshold)
            .witness(&s),
    );
    let opts = sweep_options(cfg);
    for r in 1..=emb.max_r {
        let mut c1 = CheckRecord::new(format!("condition-1 r={r}"), "fibred-cce/condition-1", true);
        let mut c2 = CheckRecord::new(format!("condition-2 r={r}"), "fibred-cce/condition-2", true);
        let (mut subsets, mut pairs, mut transitions, mut literal) = (0, 0, 0, 0);
        let levels = emb.admissible_levels(r)?;
        let mut exhaustive = true;
        for &n in &levels {
            let rep = verify_level(emb, n, r, &opts)?;
            subsets += rep.subsets;
            pairs += rep.condition1_pairs;
            transitions += rep.transitions_compared;
            literal += rep.literal_pairs_checked;
            exhaustive &= rep.exhaustive;
            if rep.condition1_failure_count > 0 || rep.misplaced_sections > 0 {
                c1.passed = false;
                c1 = c1.witnesses(rep.condition1_failures.iter().take(4));
            }
            if rep.condition2_failure_count > 0 {
                c2.passed = false;
                c2 = c2.witnesses(rep.condition2_failures.iter().take(4));
            }
        }
        report.push(
            c1.number("levels", &levels)
                .number("subsets", subsets)
                .number("pairs", pairs)
                .number("exhaustive", exhaustive),
        );
        report.push(c2.number("transitions", transitions).number("literal_pairs", literal));
    }
    Ok(())
}

fn forward_certificate(cfg: &RunConfig) -> Result<FibredCce> {
    let chain = cfg.build_chain()?;
    let cocycle = cfg.build_cocycle(chain.group())?;
    let mut emb = forward(&chain, &cocycle, cfg.max_r)?;
    if cfg.rho2_scale != Rational::from_integer(1) {
        emb.rho2 = emb.rho2.scaled(cfg.rho2_scale);
    }
    Ok(emb)
}

pub fn cmd_forward(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut report = Report::new("forward", cfg.seed, cfg.canonical());
    let emb = forward_certificate(cfg)?;
    let cocycle = cfg.build_cocycle(emb.family.chain().group())?;
    let manifest = CertificateManifest::describe(&emb, OracleSpec::Cocycle { cocycle: cocycle.kind() });
    write_text(out, "certificate.json", &manifest.to_json()?)?;
    certificate_checks(&emb, cfg, &mut report)?;
    Ok(report)
}

pub fn cmd_verify_cert(cfg: &RunConfig, cert: &Path) -> Result<Report> {
    let manifest = CertificateManifest::from_json(&fs::read_to_string(cert)?)?;
    let mut canon = cfg.canonical();
    canon.retain(|k, _| {
        matches!(k.as_str(), "seed" | "exhaustive_limit" | "samples" | "literal_pairs" | "threshold" | "ball_cap")
    });
    canon.insert("certificate".into(), manifest.label.clone());
    let mut report = Report::new("verify-cert", cfg.seed, canon);
    let emb = manifest.build(Some(cfg.ball_cap))?;
    certificate_checks(&emb, cfg, &mut report)?;
    Ok(report)
}

#[derive(Serialize)]
struct PsiRow {
    r: u32,
    level: u32,
    element: String,
    length: u32,
    psi: String,
    defect_bound: String,
}

#[derive(Serialize)]
struct LimitRow {
    element: String,
    length: u32,
    value: String,
    stabilized: bool,
    covering: usize,
    history: String,
}

pub fn cmd_backward(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut report = Report::new("backward", cfg.seed, cfg.canonical());
    let mut fcfg = cfg.clone();
    fcfg.max_r = fcfg.max_r.max(*cfg.radii.last().expect("validated nonempty"));
    let emb = forward_certificate(&fcfg)?;
    let group = emb.family.chain().group().clone();
    let opts = BackwardOptions {
        cnd: CndOptions { tol: cfg.tol, samples: cfg.cnd_samples, seed: cfg.seed, ..CndOptions::default() },
        ..BackwardOptions::default()
    };
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for &r in &cfg.radii {
        let b = build_psi(&emb, r, cfg.mean, &opts)?;
        for (g, v) in &b.table.values {
            rows.push(PsiRow {
                r,
                level: b.table.level,
                element: g.to_string(),
                length: group.word_length(g)?,
                psi: fmt_q(v),
                defect_bound: b.table.defect_bounds.get(g).map(fmt_q).unwrap_or_else(|| "0".into()),
            });
        }
        report.push(
            CheckRecord::new(format!("kernel r={r}"), "backward/kernel-well-defined", b.kernel.passed())
                .number("level", b.kernel.level)
                .number("pairs", b.kernel.pairs_checked)
                .number("second_choices", b.kernel.second_choices)
                .witnesses(b.kernel.mismatches.iter().take(4))
                .witnesses(b.kernel.sandwich_violations.iter().take(4)),
        );
        report.push(
            CheckRecord::new(format!("isometry r={r}"), "backward/projection-isometric", true)
                .number("pairs", b.isometry_pairs),
        );
        report.push(
            CheckRecord::new(format!("envelope r={r}"), "backward/envelope", b.envelope_violations.is_empty())
                .witnesses(b.envelope_violations.iter().take(8)),
        );
        let worst_defect = b.symmetry.iter().map(|s| s.defect).max().unwrap_or_default();
        report.push(
            CheckRecord::new(
                format!("symmetry r={r}"),
                "backward/symmetry-defect",
                b.symmetry.iter().all(|s| s.within),
            )
            .number("rows", b.symmetry.len())
            .number("worst_defect", fmt_q(&worst_defect))
            .witnesses(b.symmetry.iter().filter(|s| !s.within).take(8)),
        );
        match (&b.local_cnd, &b.averaged_forms) {
            (Some(c), _) => report.push(
                CheckRecord::new(format!("local-cnd r={r}"), "backward/local-cnd", c.all_cnd)
                    .number("subsets", c.subsets_checked)
                    .number("worst_eigenvalue", c.worst_eigenvalue)
                    .number("sampling_disagreements", c.sampling_disagreements)
                    .witnesses(c.first_failure.iter()),
            ),
            (None, Some(a)) => report.push(
                CheckRecord::new(format!("local-cnd r={r}"), "backward/local-cnd-averaged", a.all_nonpositive)
                    .number("subsets", a.subsets_checked)
                    .number("worst_eigenvalue", a.worst_eigenvalue)
                    .witnesses(a.first_failure.iter()),
            ),
            (None, None) => report.push(CheckRecord::new(format!("local-cnd r={r}"), "backward/local-cnd", false)),
        }
        tables.push(b.table);
    }
    let limit = limit_psi(&tables)?;
    let check = check_limit(&limit, &group, &emb.rho1, &emb.rho2, cfg.cnd_subsets, &opts.cnd)?;
    let mut lrows = Vec::new();
    for e in &limit.entries {
        lrows.push(LimitRow {
            element: e.element.clone(),
            length: group.word_length(&e.group_element)?,
            value: e.value.as_ref().map(fmt_q).unwrap_or_default(),
            stabilized: e.stabilized,
            covering: e.covering,
            history: e.history.iter().map(fmt_q).collect::<Vec<_>>().join(" "),
        });
    }
    report.push(
        CheckRecord::new("limit-envelope", "backward/limit-proper", check.envelope_violations.is_empty())
            .number("stabilized_radius", check.stabilized_radius)
            .number("flagged", limit.flagged())
            .witnesses(check.envelope_violations.iter().take(8)),
    );
    // an unstabilized limit is reported, not failed
    let cnd_ok = check.global_cnd.as_ref().is_none_or(|c| c.all_cnd);
    let mut rec =
        CheckRecord::new("limit-cnd", "backward/limit-cnd", cnd_ok).number("evaluated", check.global_cnd.is_some());
    if let Some(c) = &check.global_cnd {
        rec = rec
            .number("subsets", c.subsets_checked)
            .number("worst_eigenvalue", c.worst_eigenvalue)
            .witnesses(c.first_failure.iter());
    }
    report.push(rec);
    write_csv(out, "psi.csv", &rows)?;
    write_csv(out, "limit.csv", &lrows)?;
    Ok(report)
}

#[derive(serde::Deserialize)]
struct TableRow {
    source_level: u32,
    source: String,
    target_level: u32,
    target: String,
}

fn read_table(path: &Path) -> Result<Vec<(u32, String, u32, String)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize::<TableRow>()
        .map(|row| row.map(|t| (t.source_level, t.source, t.target_level, t.target)).map_err(csv_err))
        .collect()
}

fn build_map(cfg: &RunConfig, target: &BoxFamily) -> Result<CoarseMapFamily> {
    let t = match cfg.map_max_t {
        Some(t) => t,
        None => {
            let mut t = 2 * cfg.max_r;
            for &n in target.levels() {
                if let Some(d) = target.component(n)?.group.diameter()? {
                    t = t.max(d);
                }
            }
            t
        }
    };
    Ok(match &cfg.map {
        MapChoice::Identity => CoarseMapFamily::identity(target.clone(), t),
        MapChoice::Doubling => CoarseMapFamily::doubling(target.clone(), t)?,
        MapChoice::Constant => {
            let zero = DistanceControl::from_table(vec![0; t as usize + 1])?;
            CoarseMapFamily::constant(target.clone(), zero.clone(), zero)
        }
        MapChoice::Table(path) => {
            let rows = read_table(path)?;
            let levels: BTreeSet<u32> = rows.iter().map(|r| r.0).collect();
            let source = BoxFamily::with_levels(target.chain().clone(), levels.into_iter().collect())?;
            CoarseMapFamily::from_rows(
                source,
                target.clone(),
                rows,
                DistanceControl::scaled_identity(cfg.map_slopes.0, t),
                DistanceControl::scaled_identity(cfg.map_slopes.1, t),
            )?
        }
    })
}

pub fn cmd_pullback(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut report = Report::new("pullback", cfg.seed, cfg.canonical());
    let target = forward_certificate(cfg)?;
    let cocycle = cfg.build_cocycle(target.family.chain().group())?;
    let target_manifest = CertificateManifest::describe(&target, OracleSpec::Cocycle { cocycle: cocycle.kind() });
    let fam = build_map(cfg, &target.family)?;
    let coarse = verify_coarse(&fam, cfg.samples, cfg.seed, cfg.threshold)?;
    report.push(
        CheckRecord::new("coarse-map", "coarse-map/controls", coarse.passed())
            .number("pairs", coarse.pairs_checked)
            .number("violations", coarse.violation_count)
            .number("m_reaches_threshold", coarse.m_reaches_threshold)
            .number("net_ok", coarse.net_ok)
            .witnesses(coarse.violations.iter().take(8)),
    );
    let mut emb = pullback_fibred(&target, &fam, cfg.finiteness_bound)?;
    if emb.max_r > cfg.max_r {
        emb.max_r = cfg.max_r;
        emb.exclusion.retain(|&r, _| r <= cfg.max_r);
    }
    let manifest = CertificateManifest::pullback(&emb, &fam, target_manifest);
    write_text(out, "certificate.json", &manifest.to_json()?)?;
    certificate_checks(&emb, cfg, &mut report)?;
    Ok(report)
}
