//! Coarse embeddings between box families and the pullback of fibred
//! certificates along them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{BoxFamily, BoxPoint};
use crate::control::DistanceControl;
use crate::error::{Error, Result};
use crate::fibred::{FibreOracle, FibrePoint, FibredCce};
use crate::groups::{GroupElement, GroupSpec};
use crate::hilbert::AffineIsometry;

/// Named map constructors, as recorded in manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    Identity,
    /// `Z/2^n → Z/2^(n+1)`, `[x] ↦ [2x]`.
    Doubling,
    /// Every point to the identity coset of its own level.
    Constant,
    /// Explicit rows `(source level, source point, target level, target point)`.
    Table {
        rows: Vec<(u32, String, u32, String)>,
    },
}

/// Maps `f: X̃ → X` between the components of two families, with controls.
#[derive(Clone, Debug)]
pub struct CoarseMapFamily {
    pub source: BoxFamily,
    pub target: BoxFamily,
    pub spec: MapSpec,
    level_map: BTreeMap<u32, u32>,
    table: HashMap<BoxPoint, BoxPoint>,
    pub m: DistanceControl,
    pub big_m: DistanceControl,
    /// Net constant of a coarse equivalence, if claimed.
    pub net: Option<u64>,
}

impl CoarseMapFamily {
    pub fn identity(family: BoxFamily, max_t: u32) -> Self {
        let level_map = family.levels().iter().map(|&n| (n, n)).collect();
        CoarseMapFamily {
            source: family.clone(),
            target: family,
            spec: MapSpec::Identity,
            level_map,
            table: HashMap::new(),
            m: DistanceControl::scaled_identity(1, max_t),
            big_m: DistanceControl::scaled_identity(1, max_t),
            net: Some(0),
        }
    }

    /// Doubling into `target`, from the levels one below its own; `m(t) = t`,
    /// `M(t) = 2t`.
    pub fn doubling(target: BoxFamily, max_t: u32) -> Result<Self> {
        let chain = target.chain().clone();
        if !matches!(chain.group().spec(), GroupSpec::IntLattice(_)) {
            return Err(Error::Config("the doubling map is shipped for 2^n chains on lattices".into()));
        }
        let sources: Vec<u32> = target.levels().iter().filter(|n| target.has_level(*n + 1)).copied().collect();
        if sources.is_empty() {
            return Err(Error::Config("doubling needs two consecutive target levels".into()));
        }
        let level_map = sources.iter().map(|&n| (n, n + 1)).collect();
        Ok(CoarseMapFamily {
            source: BoxFamily::with_levels(chain, sources)?,
            target,
            spec: MapSpec::Doubling,
            level_map,
            table: HashMap::new(),
            m: DistanceControl::scaled_identity(1, max_t),
            big_m: DistanceControl::scaled_identity(2, max_t),
            net: None,
        })
    }

    pub fn constant(family: BoxFamily, m: DistanceControl, big_m: DistanceControl) -> Self {
        let level_map = family.levels().iter().map(|&n| (n, n)).collect();
        CoarseMapFamily {
            source: family.clone(),
            target: family,
            spec: MapSpec::Constant,
            level_map,
            table: HashMap::new(),
            m,
            big_m,
            net: None,
        }
    }

    /// Explicit point table. Every level of the source must be mapped to a
    /// single target level.
    pub fn from_rows(
        source: BoxFamily,
        target: BoxFamily,
        rows: Vec<(u32, String, u32, String)>,
        m: DistanceControl,
        big_m: DistanceControl,
    ) -> Result<Self> {
        let mut level_map = BTreeMap::new();
        let mut table = HashMap::new();
        for (sl, sp, tl, tp) in &rows {
            let s = source.component(*sl)?.group.parse_element(sp)?;
            let t = target.component(*tl)?.group.parse_element(tp)?;
            if *level_map.entry(*sl).or_insert(*tl) != *tl {
                return Err(Error::Config(format!("source level {sl} is mapped to two target levels")));
            }
            table.insert(BoxPoint::new(*sl, s), BoxPoint::new(*tl, t));
        }
        for &n in source.levels() {
            if !level_map.contains_key(&n) {
                return Err(Error::Config(format!("source level {n} is not the domain of any map")));
            }
        }
        Ok(CoarseMapFamily { source, target, spec: MapSpec::Table { rows }, level_map, table, m, big_m, net: None })
    }

    /// Replaces the control tables, keeping the maps.
    pub fn with_controls(mut self, m: DistanceControl, big_m: DistanceControl) -> Self {
        self.m = m;
        self.big_m = big_m;
        self
    }

    pub fn with_net(mut self, c: Option<u64>) -> Self {
        self.net = c;
        self
    }

    pub fn level_map(&self) -> &BTreeMap<u32, u32> {
        &self.level_map
    }

    pub fn target_level(&self, n: u32) -> Result<u32> {
        self.level_map
            .get(&n)
            .copied()
            .ok_or_else(|| Error::Scope(format!("source level {n} is not in the map family")))
    }

    pub fn apply(&self, level: u32, x: &GroupElement) -> Result<BoxPoint> {
        let tl = self.target_level(level)?;
        let tq = self.target.component(tl)?.group;
        match &self.spec {
            MapSpec::Identity => Ok(BoxPoint::new(tl, x.clone())),
            MapSpec::Doubling => Ok(BoxPoint::new(tl, tq.mul(x, x))),
            MapSpec::Constant => Ok(BoxPoint::new(tl, tq.identity())),
            MapSpec::Table { .. } => self
                .table
                .get(&BoxPoint::new(level, x.clone()))
                .cloned()
                .ok_or_else(|| Error::Scope(format!("{x}@{level} is not in the map table"))),
        }
    }

    /// Number of source levels mapped into each target level.
    pub fn multiplicities(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for t in self.level_map.values() {
            *out.entry(*t).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoarseViolation {
    pub level: u32,
    pub x: String,
    pub y: String,
    pub distance: u64,
    pub image_distance: u64,
    pub bound: &'static str,
    pub bound_value: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoarseReport {
    pub pairs_checked: usize,
    pub violations: Vec<CoarseViolation>,
    pub violation_count: usize,
    pub m_reaches_threshold: bool,
    pub threshold: u64,
    /// `None` when no net constant is claimed.
    pub net_ok: Option<bool>,
}

impl CoarseReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0 && self.m_reaches_threshold && self.net_ok != Some(false)
    }
}

fn component_points(family: &BoxFamily, n: u32, radius: u32) -> Result<Vec<GroupElement>> {
    family.points(n, radius)
}

/// Checks `m(d) ≤ d(f x, f y) ≤ M(d)` on all pairs of small components and
/// on `samples` random pairs per component otherwise, the unboundedness
/// proxy `m(R_max) ≥ threshold`, and the net condition when claimed.
pub fn verify_coarse(fam: &CoarseMapFamily, samples: usize, seed: u64, threshold: u64) -> Result<CoarseReport> {
    let mut report = CoarseReport {
        pairs_checked: 0,
        violations: Vec::new(),
        violation_count: 0,
        m_reaches_threshold: fam.m.reaches(threshold),
        threshold,
        net_ok: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = fam.m.max_arg();
    for &n in fam.source.levels() {
        let q = fam.source.component(n)?;
        let pts = component_points(&fam.source, n, radius / 2)?;
        let pairs: Vec<(usize, usize)> = if pts.len() <= 64 {
            (0..pts.len()).flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j))).collect()
        } else {
            let idx: Vec<usize> = (0..pts.len()).collect();
            (0..samples)
                .map(|_| {
                    let p: Vec<&usize> = idx.choose_multiple(&mut rng, 2).collect();
                    (*p[0], *p[1])
                })
                .collect()
        };
        let tl = fam.target_level(n)?;
        let tq = fam.target.component(tl)?;
        let images: Vec<BoxPoint> = pts.iter().map(|x| fam.apply(n, x)).collect::<Result<_>>()?;
        for (i, j) in pairs {
            let d = q.distance(&pts[i], &pts[j])? as u64;
            let fd = tq.distance(&images[i].elem, &images[j].elem)? as u64;
            report.pairs_checked += 1;
            let lo = fam.m.at(d)?;
            let hi = fam.big_m.at(d)?;
            for (bad, bound, value) in [(fd < lo, "m", lo), (fd > hi, "M", hi)] {
                if bad {
                    report.violation_count += 1;
                    if report.violations.len() < 16 {
                        report.violations.push(CoarseViolation {
                            level: n,
                            x: pts[i].to_string(),
                            y: pts[j].to_string(),
                            distance: d,
                            image_distance: fd,
                            bound,
                            bound_value: value,
                        });
                    }
                }
            }
        }
    }
    if let Some(c) = fam.net {
        let mut ok = true;
        let codomains: BTreeSet<u32> = fam.level_map.values().copied().collect();
        for &t in fam.target.levels() {
            if !codomains.contains(&t) {
                ok = false;
                continue;
            }
            let tq = fam.target.component(t)?;
            let mut images = Vec::new();
            for (&s, _) in fam.level_map.iter().filter(|(_, &tt)| tt == t) {
                for x in component_points(&fam.source, s, radius)? {
                    images.push(fam.apply(s, &x)?.elem);
                }
            }
            for y in component_points(&fam.target, t, radius / 2)? {
                let mut near = false;
                for im in &images {
                    if tq.distance(&y, im)? as u64 <= c {
                        near = true;
                        break;
                    }
                }
                ok &= near;
            }
        }
        report.net_ok = Some(ok);
    }
    Ok(report)
}

/// `Ỹ_x̃ = Y_{f(x̃)}`, `s̃ = s ∘ f`, `t̃_C = t_{f(C)} ∘ f`.
#[derive(Debug)]
pub struct PullbackOracle {
    target: Arc<dyn FibreOracle>,
    map: CoarseMapFamily,
}

impl PullbackOracle {
    pub fn new(target: Arc<dyn FibreOracle>, map: CoarseMapFamily) -> Self {
        PullbackOracle { target, map }
    }
}

impl FibreOracle for PullbackOracle {
    fn describe(&self) -> String {
        format!("pullback[{}]", self.target.describe())
    }

    fn fibre_base(&self, level: u32, x: &GroupElement) -> Result<BoxPoint> {
        let p = self.map.apply(level, x)?;
        self.target.fibre_base(p.level, &p.elem)
    }

    fn section(&self, level: u32, x: &GroupElement) -> Result<FibrePoint> {
        let p = self.map.apply(level, x)?;
        self.target.section(p.level, &p.elem)
    }

    fn chart(&self, level: u32, c: &[GroupElement], x: &GroupElement) -> Result<AffineIsometry> {
        let p = self.map.apply(level, x)?;
        let mut image: Vec<GroupElement> =
            c.iter().map(|y| self.map.apply(level, y).map(|q| q.elem)).collect::<Result<_>>()?;
        image.sort();
        image.dedup();
        self.target.chart(p.level, &image, &p.elem)
    }
}

/// Pulls a certificate back along `fam`. Radius `r` uses the target at
/// `M(r) + 1`, so the scope is every `r` with `M(r) + 1` inside the target
/// scope, and
/// `𝒦̃_r = f^-1(𝒦_{M(r)+1})` and the controls become `ρ1∘m`, `ρ2∘M`.
pub fn pullback_fibred(emb: &FibredCce, fam: &CoarseMapFamily, finiteness_bound: usize) -> Result<FibredCce> {
    if fam.target.chain().group() != emb.family.chain().group()
        || fam.target.chain().spec() != emb.family.chain().spec()
    {
        return Err(Error::Structural("map family target is not the certificate's base family".into()));
    }
    for (t, k) in fam.multiplicities() {
        if !emb.family.has_level(t) {
            return Err(Error::Structural(format!("target level {t} is not in the certificate family")));
        }
        if k > finiteness_bound {
            return Err(Error::Precondition(format!(
                "target level {t} is the codomain of {k} maps, above the bound {finiteness_bound}"
            )));
        }
    }
    let range = fam.big_m.max_arg().min(fam.m.max_arg());
    let mut max_r = 0;
    for r in 1..=range {
        if fam.big_m.at(r as u64)? < emb.max_r as u64 {
            max_r = r;
        }
    }
    if max_r == 0 {
        return Err(Error::Scope(format!(
            "the target certificate (max r = {}) cannot serve radius 1 of the pullback",
            emb.max_r
        )));
    }
    let mut exclusion = BTreeMap::new();
    for r in 1..=max_r {
        let target_r = fam.big_m.at(r as u64)? + 1;
        let target_r = u32::try_from(target_r).map_err(|_| Error::Scope("radius overflow".into()))?;
        let ex = emb
            .excluded(target_r)
            .map_err(|e| Error::Scope(format!("pullback at r = {r} needs the target at {target_r}: {e}")))?;
        let list = fam
            .source
            .levels()
            .iter()
            .copied()
            .filter(|&n| fam.target_level(n).map(|t| ex.contains(&t)).unwrap_or(true))
            .collect();
        exclusion.insert(r, list);
    }
    let m = DistanceControl::from_table(fam.m.table()[..=max_r as usize].to_vec())?;
    let big_m = DistanceControl::from_table(fam.big_m.table()[..=max_r as usize].to_vec())?;
    Ok(FibredCce {
        label: format!("pullback[{}]", emb.label),
        family: fam.source.clone(),
        oracle: Arc::new(PullbackOracle::new(emb.oracle.clone(), fam.clone())),
        rho1: emb.rho1.compose(&m)?,
        rho2: emb.rho2.compose(&big_m)?,
        exclusion,
        max_r,
    })
}
