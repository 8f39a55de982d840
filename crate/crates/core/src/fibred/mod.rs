//! Fibred cofinitely-coarse embedding certificates and their verifiers.
//!
//! Every fibre `Y_x` is a copy of the sparse Hilbert space, addressed in
//! canonical coordinates chosen by the oracle. A trivialization `t_C(x)`
//! is returned as an affine isometry from those coordinates into `H`.
//! Isometries are compared extensionally on a deterministic probe set:
//! the origin, the section images and the unit vectors of every key the
//! compared maps touch.

mod boxcert;
mod corrupt;
mod sweep;

pub use boxcert::{boxspace_to_family, family_to_boxspace, BoxRegion, BoxSpaceCce};
pub use corrupt::ReflectedOracle;
pub use sweep::{in_scope_subsets, verify_level, SweepOptions, SweepReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::chains::{BoxFamily, BoxPoint};
use crate::control::Control;
use crate::error::{Error, Result};
use crate::groups::GroupElement;
use crate::hilbert::{AffineIsometry, BasisKey, HilbertVec};
use crate::Rational;

/// A point of a fibre, in the canonical coordinates of its oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibrePoint {
    /// The base point whose fibre contains this point.
    pub base: BoxPoint,
    /// Fixed coset representative the coordinates are taken against.
    pub rep: GroupElement,
    pub y: HilbertVec,
}

/// Code-backed fibre field, section and trivializations over a box family.
pub trait FibreOracle: Send + Sync + fmt::Debug {
    /// Short human-readable name, recorded in reports.
    fn describe(&self) -> String;

    /// The base point whose fibre serves as `Y_x`.
    fn fibre_base(&self, level: u32, x: &GroupElement) -> Result<BoxPoint>;

    /// `s(x) ∈ Y_x`.
    fn section(&self, level: u32, x: &GroupElement) -> Result<FibrePoint>;

    /// `t_C(x)` as a map from fibre coordinates to `H`. Must be pure.
    fn chart(&self, level: u32, c: &[GroupElement], x: &GroupElement) -> Result<AffineIsometry>;
}

/// A fibred cofinitely-coarse embedding with explicit certified scope.
#[derive(Clone, Debug)]
pub struct FibredCce {
    pub label: String,
    pub family: BoxFamily,
    pub oracle: Arc<dyn FibreOracle>,
    pub rho1: Control,
    pub rho2: Control,
    /// `r ↦ 𝒦_r` for `r = 1..=max_r`, as sorted level lists.
    pub exclusion: BTreeMap<u32, Vec<u32>>,
    pub max_r: u32,
}

/// Results of the structural invariants of a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub exclusion_finite_and_monotone: bool,
    pub controls_monotone: bool,
    pub rho1_reaches_threshold: bool,
    pub controls_cover_scope: bool,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.exclusion_finite_and_monotone
            && self.controls_monotone
            && self.rho1_reaches_threshold
            && self.controls_cover_scope
    }
}

impl FibredCce {
    /// `𝒦_r`.
    pub fn excluded(&self, r: u32) -> Result<&[u32]> {
        if r == 0 || r > self.max_r {
            return Err(Error::Scope(format!("radius {r} outside certified range 1..={}", self.max_r)));
        }
        self.exclusion
            .get(&r)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Scope(format!("no exclusion list for radius {r}")))
    }

    /// Levels where the certificate makes a claim at radius `r`.
    pub fn admissible_levels(&self, r: u32) -> Result<Vec<u32>> {
        let ex = self.excluded(r)?;
        Ok(self.family.levels().iter().copied().filter(|n| !ex.contains(n)).collect())
    }

    pub fn check_scope(&self, level: u32, r: u32) -> Result<()> {
        if !self.family.has_level(level) {
            return Err(Error::Scope(format!("level {level} is not part of the base family")));
        }
        if self.excluded(r)?.contains(&level) {
            return Err(Error::Scope(format!("level {level} is in the exclusion list at radius {r}")));
        }
        Ok(())
    }

    /// Finite, monotone `𝒦_r`; monotone controls; `ρ1` unbounded in the
    /// threshold sense; controls covering every distance below `max_r`.
    pub fn structure(&self, rho1_threshold_sq: Rational) -> StructureReport {
        let mut monotone = true;
        let mut prev: BTreeSet<u32> = BTreeSet::new();
        for r in 1..=self.max_r {
            match self.exclusion.get(&r) {
                Some(list) => {
                    let cur: BTreeSet<u32> = list.iter().copied().collect();
                    monotone &= prev.is_subset(&cur);
                    prev = cur;
                }
                None => monotone = false,
            }
        }
        StructureReport {
            exclusion_finite_and_monotone: monotone,
            controls_monotone: self.rho1.is_monotone() && self.rho2.is_monotone(),
            rho1_reaches_threshold: self.rho1.reaches(rho1_threshold_sq),
            controls_cover_scope: self.rho1.max_arg() + 1 >= self.max_r && self.rho2.max_arg() + 1 >= self.max_r,
        }
    }
}

/// A pair failing the sandwich inequality.
#[derive(Clone, Debug, Serialize)]
pub struct PairViolation {
    pub x: String,
    pub y: String,
    pub distance: u32,
    #[serde(with = "crate::rational::single")]
    pub attained_sq: Rational,
    /// `rho1` when the lower bound fails, `rho2` for the upper bound.
    pub bound: &'static str,
    #[serde(with = "crate::rational::single")]
    pub bound_sq: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition1Report {
    pub level: u32,
    pub r: u32,
    pub points: Vec<String>,
    pub distances: Vec<Vec<u32>>,
    /// Squared distances between the images `t_C(x)(s(x))`.
    #[serde(serialize_with = "ser_matrix")]
    pub attained_sq: Vec<Vec<Rational>>,
    pub violations: Vec<PairViolation>,
    /// Points whose section did not land in their own fibre.
    pub misplaced_sections: Vec<String>,
    /// Box-space subsets meeting several components have no trivialization.
    pub spans_components: bool,
}

fn ser_matrix<S: serde::Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    m.iter().map(|row| row.iter().map(crate::rational::format).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
}

impl Condition1Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.misplaced_sections.is_empty() && !self.spans_components
    }
}

fn diameter_below(emb: &FibredCce, level: u32, c: &[GroupElement], r: u32) -> Result<()> {
    let q = emb.family.component(level)?;
    for (i, x) in c.iter().enumerate() {
        if !q.group.contains(x) {
            return Err(Error::Structural(format!("{x} is not a point of level {level}")));
        }
        for y in &c[i + 1..] {
            if q.distance(x, y)? >= r {
                return Err(Error::Precondition(format!("subset has diameter ≥ {r}")));
            }
        }
    }
    Ok(())
}

/// Images `t_C(x)(s(x))`, plus any point whose section left its fibre.
pub(crate) fn section_images(
    emb: &FibredCce,
    level: u32,
    c: &[GroupElement],
) -> Result<(Vec<HilbertVec>, Vec<AffineIsometry>, Vec<String>)> {
    let mut images = Vec::with_capacity(c.len());
    let mut charts = Vec::with_capacity(c.len());
    let mut misplaced = Vec::new();
    for x in c {
        let s = emb.oracle.section(level, x)?;
        if s.base != emb.oracle.fibre_base(level, x)? {
            misplaced.push(x.to_string());
        }
        let t = emb.oracle.chart(level, c, x)?;
        images.push(t.apply(&s.y));
        charts.push(t);
    }
    Ok((images, charts, misplaced))
}

/// Sandwich check on precomputed images; shared with the sweep.
pub(crate) fn sandwich(
    emb: &FibredCce,
    level: u32,
    r: u32,
    c: &[GroupElement],
    images: &[HilbertVec],
    misplaced: Vec<String>,
) -> Result<Condition1Report> {
    let q = emb.family.component(level)?;
    let m = c.len();
    let mut distances = vec![vec![0u32; m]; m];
    let mut attained = vec![vec![Rational::zero(); m]; m];
    let mut violations = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let d = q.distance(&c[i], &c[j])?;
            let a = images[i].sub(&images[j]).norm_sq();
            distances[i][j] = d;
            distances[j][i] = d;
            attained[i][j] = a;
            attained[j][i] = a;
            let lo = emb.rho1.at_sq(d as u64)?;
            let hi = emb.rho2.at_sq(d as u64)?;
            for (bad, bound, bound_sq) in [(a < lo, "rho1", lo), (a > hi, "rho2", hi)] {
                if bad {
                    violations.push(PairViolation {
                        x: c[i].to_string(),
                        y: c[j].to_string(),
                        distance: d,
                        attained_sq: a,
                        bound,
                        bound_sq,
                    });
                }
            }
        }
    }
    Ok(Condition1Report {
        level,
        r,
        points: c.iter().map(|x| x.to_string()).collect(),
        distances,
        attained_sq: attained,
        violations,
        misplaced_sections: misplaced,
        spans_components: false,
    })
}

/// Condition 1: `ρ1(d(x,y)) ≤ ‖t_C(x)s(x) - t_C(y)s(y)‖ ≤ ρ2(d(x,y))` on `C`.
pub fn verify_condition1(emb: &FibredCce, level: u32, r: u32, c: &[GroupElement]) -> Result<Condition1Report> {
    emb.check_scope(level, r)?;
    diameter_below(emb, level, c, r)?;
    let (images, _, misplaced) = section_images(emb, level, c)?;
    sandwich(emb, level, r, c, &images, misplaced)
}

fn vec_strings(v: &HilbertVec) -> String {
    v.to_string()
}

/// The common isometry `t_{C1 C2}` found on an overlap.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapWitness {
    pub level: u32,
    pub c1: Vec<String>,
    pub c2: Vec<String>,
    /// Translation vector of `t_{C1}(x) ∘ t_{C2}(x)^-1`.
    pub translation: String,
    pub linear_ops: usize,
    pub probes: usize,
    #[serde(with = "crate::rational::single")]
    pub max_residual_sq: Rational,
    #[serde(skip)]
    pub map: AffineIsometry,
}

impl OverlapWitness {
    pub fn is_identity(&self) -> bool {
        self.map == AffineIsometry::identity()
    }
}

/// A point of the overlap whose transition map disagrees with the first one.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapFailure {
    pub level: u32,
    pub c1: Vec<String>,
    pub c2: Vec<String>,
    pub reference_point: String,
    pub offending_point: String,
    pub probe: String,
    #[serde(with = "crate::rational::single")]
    pub residual_sq: Rational,
}

/// Condition 2: `t_{C1}(x) ∘ t_{C2}(x)^-1` is one isometry for all `x ∈ C1 ∩ C2`.
pub fn verify_condition2(
    emb: &FibredCce,
    level: u32,
    r: u32,
    c1: &[GroupElement],
    c2: &[GroupElement],
) -> Result<std::result::Result<OverlapWitness, OverlapFailure>> {
    emb.check_scope(level, r)?;
    diameter_below(emb, level, c1, r)?;
    diameter_below(emb, level, c2, r)?;
    let overlap: Vec<&GroupElement> = c1.iter().filter(|x| c2.contains(x)).collect();
    if overlap.is_empty() {
        return Err(Error::Precondition("condition 2 needs overlapping subsets".into()));
    }
    let mut transitions = Vec::with_capacity(overlap.len());
    let mut probes: BTreeSet<HilbertVec> = BTreeSet::new();
    probes.insert(HilbertVec::zero());
    for x in &overlap {
        let t1 = emb.oracle.chart(level, c1, x)?;
        let t2 = emb.oracle.chart(level, c2, x)?;
        let s = emb.oracle.section(level, x)?;
        let t = t1.compose(&t2.inverse());
        let mut keys: BTreeSet<BasisKey> = t.touched_keys();
        keys.extend(t1.touched_keys());
        keys.extend(t2.touched_keys());
        for k in keys {
            probes.insert(HilbertVec::unit(k));
        }
        probes.insert(t2.apply(&s.y));
        transitions.push(t);
    }
    let names = |c: &[GroupElement]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let reference = &transitions[0];
    let reference_images: Vec<HilbertVec> = probes.iter().map(|p| reference.apply(p)).collect();
    for (x, t) in overlap.iter().zip(&transitions).skip(1) {
        for (p, expected) in probes.iter().zip(&reference_images) {
            let got = t.apply(p);
            if &got != expected {
                return Ok(Err(OverlapFailure {
                    level,
                    c1: names(c1),
                    c2: names(c2),
                    reference_point: overlap[0].to_string(),
                    offending_point: x.to_string(),
                    probe: vec_strings(p),
                    residual_sq: got.sub(expected).norm_sq(),
                }));
            }
        }
    }
    Ok(Ok(OverlapWitness {
        level,
        c1: names(c1),
        c2: names(c2),
        translation: vec_strings(&reference.translation),
        linear_ops: reference.linear.ops().len(),
        probes: probes.len(),
        max_residual_sq: Rational::zero(),
        map: reference.clone(),
    }))
}
