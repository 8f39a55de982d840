use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::mean::{MeanProvider, MeanSet};
use super::scope_err;
use crate::control::Control;
use crate::error::{Error, Result};
use crate::fibred::FibredCce;
use crate::groups::{Group, GroupElement};
use crate::hilbert::{
    cnd_check, cnd_function_check, local_subsets, sampled_subsets, CndFunctionReport, CndOptions, FunctionTable,
    Locality,
};
use crate::Rational;

/// Smallest level outside `𝒦_r` whose subgroup avoids `ball(2r)`.
pub fn backward_level(emb: &FibredCce, r: u32) -> Result<u32> {
    let chain = emb.family.chain();
    for n in emb.admissible_levels(r)? {
        if chain.separation(n)?.separates(2 * r) {
            return Ok(n);
        }
    }
    Err(scope_err(format!("no admissible level separates radius {} at r = {r}", 2 * r)))
}

/// `k_r([x],[y]) = ‖t_C([x])s([x]) - t_C([y])s([y])‖²` for `d < r`, else 0.
#[derive(Debug)]
pub struct KernelKr {
    emb: FibredCce,
    r: u32,
    level: u32,
    quotient: Group,
    cache: Mutex<HashMap<(GroupElement, GroupElement), Rational>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelMismatch {
    pub x: String,
    pub y: String,
    #[serde(with = "crate::rational::single")]
    pub first: Rational,
    #[serde(with = "crate::rational::single")]
    pub second: Rational,
    pub second_subset: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub level: u32,
    pub r: u32,
    pub pairs_checked: usize,
    /// Pairs for which a second covering subset with a different basepoint existed.
    pub second_choices: usize,
    pub mismatches: Vec<KernelMismatch>,
    pub sandwich_violations: Vec<String>,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.sandwich_violations.is_empty()
    }
}

pub fn build_kernel_kr(emb: &FibredCce, r: u32) -> Result<KernelKr> {
    let level = backward_level(emb, r)?;
    let quotient = emb.family.component(level)?.group;
    Ok(KernelKr { emb: emb.clone(), r, level, quotient, cache: Mutex::new(HashMap::new()) })
}

impl KernelKr {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn quotient(&self) -> &Group {
        &self.quotient
    }

    pub fn certificate(&self) -> &FibredCce {
        &self.emb
    }

    /// Evaluates with an explicit covering subset `C ∋ x, y`.
    pub fn value_with(&self, c: &[GroupElement], x: &GroupElement, y: &GroupElement) -> Result<Rational> {
        let oracle = &self.emb.oracle;
        let sx = oracle.section(self.level, x)?;
        let sy = oracle.section(self.level, y)?;
        let vx = oracle.chart(self.level, c, x)?.apply(&sx.y);
        let vy = oracle.chart(self.level, c, y)?.apply(&sy.y);
        Ok(vx.sub(&vy).norm_sq())
    }

    /// `k_r` with the default subset `C = {x, y}`, memoized.
    pub fn value(&self, x: &GroupElement, y: &GroupElement) -> Result<Rational> {
        if x == y {
            return Ok(Rational::zero());
        }
        let key = if x < y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
        if let Some(v) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*v);
        }
        let v = if self.quotient.distance(x, y)? >= self.r {
            Rational::zero()
        } else {
            self.value_with(&[key.0.clone(), key.1.clone()], &key.0, &key.1)?
        };
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, v);
        Ok(v)
    }

    /// A second covering subset `{w, x, y}` of diameter `< r`, preferring
    /// `w` smaller than both so the basepoint changes.
    pub fn alternative_subset(&self, x: &GroupElement, y: &GroupElement) -> Result<Option<Vec<GroupElement>>> {
        let q = &self.quotient;
        let lo = x.min(y);
        let mut fallback = None;
        for u in q.ball(self.r - 1)? {
            let w = q.mul(x, &u);
            if &w == x || &w == y || q.distance(&w, y)? >= self.r {
                continue;
            }
            let mut c = vec![w.clone(), x.clone(), y.clone()];
            c.sort();
            if &w < lo {
                return Ok(Some(c));
            }
            fallback.get_or_insert(c);
        }
        Ok(fallback)
    }

    /// Well-definedness across two subsets and the sandwich bound on given pairs.
    pub fn check_pairs<'a, I>(&self, pairs: I) -> Result<KernelReport>
    where
        I: IntoIterator<Item = (&'a GroupElement, &'a GroupElement)>,
    {
        let mut report = KernelReport {
            level: self.level,
            r: self.r,
            pairs_checked: 0,
            second_choices: 0,
            mismatches: Vec::new(),
            sandwich_violations: Vec::new(),
        };
        for (x, y) in pairs {
            let d = self.quotient.distance(x, y)?;
            if d >= self.r || x == y {
                continue;
            }
            report.pairs_checked += 1;
            let first = self.value(x, y)?;
            if let Some(c) = self.alternative_subset(x, y)? {
                report.second_choices += 1;
                let second = self.value_with(&c, x, y)?;
                if second != first {
                    report.mismatches.push(KernelMismatch {
                        x: x.to_string(),
                        y: y.to_string(),
                        first,
                        second,
                        second_subset: c.iter().map(|g| g.to_string()).collect(),
                    });
                }
            }
            let lo = self.emb.rho1.at_sq(d as u64)?;
            let hi = self.emb.rho2.at_sq(d as u64)?;
            if first < lo || first > hi {
                report.sandwich_violations.push(format!("k({x},{y}) = {first} outside [{lo}, {hi}] at d = {d}"));
            }
        }
        Ok(report)
    }
}

/// `φ_r([x])` and the bound on `|φ_r([x]) - φ_r([x]^-1)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhiValue {
    pub value: Rational,
    pub defect_bound: Rational,
}

/// Averages `k_r([t], [t x])` over the mean set. For Følner boxes the
/// symmetry defect is at most `δ(N, x^-1)/2 · ρ2(l(x))²`, since the two
/// averages differ only on `F Δ F x^-1` and every term lies in `[0, ρ2²]`.
pub fn build_phi(kernel: &KernelKr, mean: &MeanSet, x: &GroupElement) -> Result<PhiValue> {
    let q = kernel.quotient();
    if mean.group != *q {
        return Err(Error::Structural("mean set is for a different quotient".into()));
    }
    let l = q.word_length(x)?;
    if l >= kernel.r() {
        return Err(scope_err(format!("φ_r evaluated at {x} of length {l} ≥ r = {}", kernel.r())));
    }
    let mut sum = Rational::zero();
    for t in &mean.points {
        sum += kernel.value(t, &q.mul(t, x))?;
    }
    let value = sum / Rational::from_integer(mean.points.len() as i64);
    let delta = mean.provider.defect(q, &q.inverse(x))?;
    let defect_bound = delta / Rational::from_integer(2) * kernel.certificate().rho2.at_sq(l as u64)?;
    Ok(PhiValue { value, defect_bound })
}

/// `ψ_r` on the open ball `l(g) < r`; zero outside.
#[derive(Clone, Debug)]
pub struct PsiTable {
    pub r: u32,
    pub level: u32,
    pub mean: MeanProvider,
    pub values: BTreeMap<GroupElement, Rational>,
    pub defect_bounds: BTreeMap<GroupElement, Rational>,
}

impl PsiTable {
    pub fn as_function(&self) -> FunctionTable {
        FunctionTable { values: self.values.clone(), outside: Some(Rational::zero()) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryRow {
    pub element: String,
    #[serde(with = "crate::rational::single")]
    pub defect: Rational,
    #[serde(with = "crate::rational::single")]
    pub bound: Rational,
    pub within: bool,
}

/// Mean-zero forms of the averaged kernels `avg_t k_r(t π g_i, t π g_j)`.
#[derive(Clone, Debug, Serialize)]
pub struct AveragedFormsReport {
    pub subsets_checked: usize,
    pub all_nonpositive: bool,
    pub worst_eigenvalue: f64,
    pub first_failure: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct BackwardOptions {
    pub cnd: CndOptions,
    pub subset_cap: usize,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        BackwardOptions { cnd: CndOptions { samples: 256, ..CndOptions::default() }, subset_cap: 200_000 }
    }
}

#[derive(Clone, Debug)]
pub struct PsiBuild {
    pub table: PsiTable,
    pub kernel: KernelReport,
    pub isometry_pairs: usize,
    /// Local CND of `ψ_r` itself; present when the table is exactly symmetric.
    pub local_cnd: Option<CndFunctionReport>,
    /// Present for Følner means.
    pub averaged_forms: Option<AveragedFormsReport>,
    pub envelope_violations: Vec<String>,
    pub symmetry: Vec<SymmetryRow>,
}

impl PsiBuild {
    pub fn passed(&self) -> bool {
        self.kernel.passed()
            && self.envelope_violations.is_empty()
            && self.symmetry.iter().all(|s| s.within)
            && self.local_cnd.as_ref().is_none_or(|c| c.all_cnd)
            && self.averaged_forms.as_ref().is_none_or(|a| a.all_nonpositive)
            && (self.local_cnd.is_some() || self.averaged_forms.is_some())
    }
}

/// Runs the backward construction at radius `r`.
pub fn build_psi(emb: &FibredCce, r: u32, mean: MeanProvider, opts: &BackwardOptions) -> Result<PsiBuild> {
    let kernel = build_kernel_kr(emb, r)?;
    let chain = emb.family.chain().clone();
    let group = chain.group().clone();
    let level = kernel.level();
    let q = kernel.quotient().clone();
    let ball = group.ball(r)?;

    // π_{n_r} must be isometric on every diameter-< r subset of the ball
    let mut isometry_pairs = 0;
    for (i, g) in ball.iter().enumerate() {
        let pg = chain.project(level, g)?;
        for h in &ball[i + 1..] {
            let d = group.distance(g, h)?;
            if d < r {
                isometry_pairs += 1;
                let dq = q.distance(&pg, &chain.project(level, h)?)?;
                if dq != d {
                    return Err(Error::Precondition(format!(
                        "π_{level} is not isometric on the {r}-ball: d({g},{h}) = {d}, image distance {dq}"
                    )));
                }
            }
        }
    }

    let kernel_pairs: Vec<(GroupElement, GroupElement)> = if q.order().is_some_and(|o| o <= 4096) {
        let pts = q.elements()?;
        let mut pairs = Vec::new();
        for (i, x) in pts.iter().enumerate() {
            for y in &pts[i + 1..] {
                pairs.push((x.clone(), y.clone()));
            }
        }
        pairs
    } else {
        let img: BTreeSet<GroupElement> = ball.iter().map(|g| chain.project(level, g)).collect::<Result<_>>()?;
        let img: Vec<GroupElement> = img.into_iter().collect();
        let mut pairs = Vec::new();
        for (i, x) in img.iter().enumerate() {
            for y in &img[i + 1..] {
                pairs.push((x.clone(), y.clone()));
            }
        }
        pairs
    };
    let kernel_report = kernel.check_pairs(kernel_pairs.iter().map(|(x, y)| (x, y)))?;

    let mean_set = mean.prepare(&q)?;
    let mut phi_cache: BTreeMap<GroupElement, PhiValue> = BTreeMap::new();
    let mut values = BTreeMap::new();
    let mut defect_bounds = BTreeMap::new();
    for g in ball.iter().filter(|g| group.word_length(g).map(|l| l < r).unwrap_or(false)) {
        let x = chain.project(level, g)?;
        let phi = match phi_cache.get(&x) {
            Some(p) => *p,
            None => {
                let p = build_phi(&kernel, &mean_set, &x)?;
                phi_cache.insert(x.clone(), p);
                p
            }
        };
        values.insert(g.clone(), phi.value);
        defect_bounds.insert(g.clone(), phi.defect_bound);
    }
    let table = PsiTable { r, level, mean, values, defect_bounds };

    let envelope_violations = envelope(&group, &table.values, &emb.rho1, &emb.rho2)?;

    let mut symmetry = Vec::new();
    let mut symmetric = true;
    for (g, v) in &table.values {
        let inv = table.values[&group.inverse(g)];
        let defect = (*v - inv).abs();
        let bound = table.defect_bounds[g];
        symmetric &= defect.is_zero();
        symmetry.push(SymmetryRow { element: g.to_string(), defect, bound, within: defect <= bound });
    }

    let subsets = local_subsets(&group, &ball, r, opts.subset_cap)?;
    let local_cnd = if symmetric {
        Some(cnd_function_check(&group, &table.as_function(), Locality::Local(r), &subsets, &opts.cnd)?)
    } else {
        None
    };
    let averaged_forms = match mean {
        MeanProvider::FiniteUniform => None,
        MeanProvider::Foelner { .. } => Some(averaged_forms(&kernel, &mean_set, &chain, &subsets, &opts.cnd)?),
    };

    Ok(PsiBuild {
        table,
        kernel: kernel_report,
        isometry_pairs,
        local_cnd,
        averaged_forms,
        envelope_violations,
        symmetry,
    })
}

fn averaged_forms(
    kernel: &KernelKr,
    mean: &MeanSet,
    chain: &crate::chains::Chain,
    subsets: &[Vec<GroupElement>],
    opts: &CndOptions,
) -> Result<AveragedFormsReport> {
    let q = kernel.quotient();
    let count = Rational::from_integer(mean.points.len() as i64);
    let mut report =
        AveragedFormsReport { subsets_checked: 0, all_nonpositive: true, worst_eigenvalue: 0.0, first_failure: None };
    for (idx, s) in subsets.iter().enumerate() {
        if s.len() < 2 {
            continue;
        }
        let img: Vec<GroupElement> = s.iter().map(|g| chain.project(kernel.level(), g)).collect::<Result<_>>()?;
        let m = img.len();
        let mut k = vec![vec![Rational::zero(); m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let mut sum = Rational::zero();
                for t in &mean.points {
                    sum += kernel.value(&q.mul(t, &img[i]), &q.mul(t, &img[j]))?;
                }
                k[i][j] = sum / count;
                k[j][i] = k[i][j];
            }
        }
        let v = cnd_check(&k, &CndOptions { seed: opts.seed.wrapping_add(idx as u64), ..opts.clone() })?;
        report.subsets_checked += 1;
        report.worst_eigenvalue = report.worst_eigenvalue.max(v.max_eigenvalue);
        if !v.is_cnd && report.all_nonpositive {
            report.all_nonpositive = false;
            report.first_failure = Some(s.iter().map(|g| g.to_string()).collect());
        }
    }
    Ok(report)
}

/// Entries violating `ρ1(l(g))² ≤ ψ(g) ≤ ρ2(l(g))²`.
pub fn envelope(
    group: &Group,
    values: &BTreeMap<GroupElement, Rational>,
    rho1: &Control,
    rho2: &Control,
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (g, v) in values {
        let l = group.word_length(g)? as u64;
        let lo = rho1.at_sq(l)?;
        let hi = rho2.at_sq(l)?;
        if *v < lo || *v > hi {
            out.push(format!("ψ({g}) = {v} outside [{lo}, {hi}]"));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitEntry {
    pub element: String,
    #[serde(skip)]
    pub group_element: GroupElement,
    /// Set only when the last two available values agree exactly.
    #[serde(serialize_with = "ser_opt")]
    pub value: Option<Rational>,
    pub stabilized: bool,
    pub covering: usize,
    #[serde(with = "crate::rational::vec")]
    pub history: Vec<Rational>,
}

fn ser_opt<S: serde::Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&crate::rational::format(r)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitTable {
    pub radii: Vec<u32>,
    pub entries: Vec<LimitEntry>,
}

impl LimitTable {
    pub fn stabilized_values(&self) -> BTreeMap<GroupElement, Rational> {
        self.entries.iter().filter_map(|e| e.value.map(|v| (e.group_element.clone(), v))).collect()
    }

    pub fn flagged(&self) -> usize {
        self.entries.iter().filter(|e| !e.stabilized).count()
    }
}

/// Pointwise stabilization over tables of increasing radius. Entries seen
/// in fewer than two tables, or whose last two values differ, are flagged.
pub fn limit_psi(tables: &[PsiTable]) -> Result<LimitTable> {
    if tables.windows(2).any(|w| w[0].r >= w[1].r) {
        return Err(Error::Precondition("ψ tables must have strictly increasing radii".into()));
    }
    let keys: BTreeSet<&GroupElement> = tables.iter().flat_map(|t| t.values.keys()).collect();
    let entries = keys
        .into_iter()
        .map(|g| {
            let history: Vec<Rational> = tables.iter().filter_map(|t| t.values.get(g).copied()).collect();
            let stabilized = history.len() >= 2 && history[history.len() - 1] == history[history.len() - 2];
            LimitEntry {
                element: g.to_string(),
                group_element: g.clone(),
                value: stabilized.then(|| history[history.len() - 1]),
                stabilized,
                covering: history.len(),
                history,
            }
        })
        .collect();
    Ok(LimitTable { radii: tables.iter().map(|t| t.r).collect(), entries })
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    /// Largest `R` with every element of `ball(R)` stabilized.
    pub stabilized_radius: Option<u32>,
    pub envelope_violations: Vec<String>,
    pub global_cnd: Option<CndFunctionReport>,
}

impl LimitCheck {
    pub fn passed(&self) -> bool {
        self.envelope_violations.is_empty() && self.global_cnd.as_ref().is_some_and(|c| c.all_cnd)
    }
}

/// Envelope on the stabilized entries and global CND on sampled subsets of
/// `ball(R/2)`, where `ball(R)` is fully stabilized.
pub fn check_limit(
    limit: &LimitTable,
    group: &Group,
    rho1: &Control,
    rho2: &Control,
    subsets: usize,
    opts: &CndOptions,
) -> Result<LimitCheck> {
    let values = limit.stabilized_values();
    let mut stabilized_radius = None;
    let mut radius = 0;
    loop {
        let sphere = group.sphere(radius)?;
        if sphere.is_empty() || !sphere.iter().all(|g| values.contains_key(g)) {
            break;
        }
        stabilized_radius = Some(radius);
        radius += 1;
    }
    let envelope_violations = envelope(group, &values, rho1, rho2)?;
    let global_cnd = match stabilized_radius {
        Some(rs) => {
            let pool = group.ball(rs / 2)?;
            let mut picked = Vec::new();
            for size in 2..=pool.len().min(6) {
                picked.extend(sampled_subsets(&pool, size, subsets.div_ceil(5), opts.seed ^ size as u64));
            }
            let f = FunctionTable { values, outside: None };
            Some(cnd_function_check(group, &f, Locality::Global, &picked, opts)?)
        }
        None => None,
    };
    Ok(LimitCheck { stabilized_radius, envelope_violations, global_cnd })
}
