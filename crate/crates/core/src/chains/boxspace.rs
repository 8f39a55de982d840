use std::fmt::Debug;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Chain, QuotientSpace};
use crate::error::{Error, Result};
use crate::groups::GroupElement;

/// A point of the box space: a coset in the component `G/G_level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxPoint {
    pub level: u32,
    pub elem: GroupElement,
}

impl BoxPoint {
    pub fn new(level: u32, elem: GroupElement) -> Self {
        BoxPoint { level, elem }
    }
}

impl std::fmt::Display for BoxPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.elem, self.level)
    }
}

/// The metric family `{(G/G_n, d_n)}` over a selection of chain levels.
#[derive(Clone, Debug)]
pub struct BoxFamily {
    chain: Chain,
    levels: Vec<u32>,
}

impl BoxFamily {
    /// All levels of the chain.
    pub fn new(chain: Chain) -> Self {
        let levels = chain.level_indices();
        BoxFamily { chain, levels }
    }

    pub fn with_levels(chain: Chain, mut levels: Vec<u32>) -> Result<Self> {
        levels.sort_unstable();
        levels.dedup();
        for &n in &levels {
            if n == 0 || n > chain.depth() {
                return Err(Error::Scope(format!("level {n} outside chain depth {}", chain.depth())));
            }
        }
        Ok(BoxFamily { chain, levels })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn has_level(&self, n: u32) -> bool {
        self.levels.binary_search(&n).is_ok()
    }

    pub fn component(&self, n: u32) -> Result<QuotientSpace> {
        if !self.has_level(n) {
            return Err(Error::Scope(format!("level {n} is not a component of this family")));
        }
        self.chain.quotient(n)
    }

    pub fn distance(&self, n: u32, x: &GroupElement, y: &GroupElement) -> Result<u32> {
        self.component(n)?.distance(x, y)
    }

    /// Diameter of a subset of one component.
    pub fn diameter(&self, n: u32, subset: &[GroupElement]) -> Result<u32> {
        let q = self.component(n)?;
        let mut diam = 0;
        for (i, x) in subset.iter().enumerate() {
            for y in &subset[i + 1..] {
                diam = diam.max(q.distance(x, y)?);
            }
        }
        Ok(diam)
    }

    /// Every element of a finite component, or the identity-centred ball of
    /// `radius` in an infinite one.
    pub fn points(&self, n: u32, radius: u32) -> Result<Vec<GroupElement>> {
        let q = self.component(n)?;
        if q.is_bounded() {
            q.group.elements()
        } else {
            q.group.ball(radius)
        }
    }
}

/// A metric space whose distances are natural numbers.
pub trait MetricSpace {
    type Point: Clone + Debug + PartialEq;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Result<u64>;
}

/// The box space `Box(G) = ⊔ G/G_n` with the metric `d'`.
#[derive(Clone, Debug)]
pub struct BoxSpace {
    family: BoxFamily,
}

impl BoxSpace {
    pub fn new(family: BoxFamily) -> Self {
        BoxSpace { family }
    }

    pub fn family(&self) -> &BoxFamily {
        &self.family
    }

    /// `d'(x, y)`: `d_n` inside a component, `l_n(x) + l_m(y) + n + m` across.
    pub fn box_distance(&self, x: &BoxPoint, y: &BoxPoint) -> Result<u64> {
        if x.level == y.level {
            return Ok(self.family.distance(x.level, &x.elem, &y.elem)? as u64);
        }
        let lx = self.family.component(x.level)?.length(&x.elem)? as u64;
        let ly = self.family.component(y.level)?.length(&y.elem)? as u64;
        Ok(lx + ly + x.level as u64 + y.level as u64)
    }

    /// `inf d'(G/G_n, G/G_m)`, attained at the identity cosets.
    pub fn component_separation(&self, n: u32, m: u32) -> Result<u64> {
        if n == m {
            return Err(Error::Precondition("component separation needs n ≠ m".into()));
        }
        self.family.component(n)?;
        self.family.component(m)?;
        Ok(n as u64 + m as u64)
    }

    pub fn identity_point(&self, n: u32) -> Result<BoxPoint> {
        Ok(BoxPoint::new(n, self.family.component(n)?.group.identity()))
    }
}

impl MetricSpace for BoxSpace {
    type Point = BoxPoint;

    fn distance(&self, a: &BoxPoint, b: &BoxPoint) -> Result<u64> {
        self.box_distance(a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Identity,
    Indiscernibles,
    Symmetry,
    Triangle,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricViolation {
    pub axiom: Axiom,
    pub points: Vec<String>,
    pub distances: Vec<u64>,
}

/// Outcome of a metric-axiom sweep. Only the first few violations are kept.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MetricReport {
    pub triples_checked: usize,
    pub violation_count: usize,
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, v: MetricViolation) {
        self.violation_count += 1;
        if self.violations.len() < 16 {
            self.violations.push(v);
        }
    }
}

/// Checks identity, indiscernibles, symmetry and the triangle inequality
/// on every supplied triple.
pub fn check_metric_axioms<M, I>(space: &M, triples: I) -> Result<MetricReport>
where
    M: MetricSpace,
    M::Point: Debug,
    I: IntoIterator<Item = (M::Point, M::Point, M::Point)>,
{
    let mut report = MetricReport::default();
    let name = |p: &M::Point| format!("{p:?}");
    for (x, y, z) in triples {
        report.triples_checked += 1;
        let xx = space.distance(&x, &x)?;
        if xx != 0 {
            report.record(MetricViolation { axiom: Axiom::Identity, points: vec![name(&x)], distances: vec![xx] });
        }
        let xy = space.distance(&x, &y)?;
        let yx = space.distance(&y, &x)?;
        if xy == 0 && x != y {
            report.record(MetricViolation {
                axiom: Axiom::Indiscernibles,
                points: vec![name(&x), name(&y)],
                distances: vec![xy],
            });
        }
        if xy != yx {
            report.record(MetricViolation {
                axiom: Axiom::Symmetry,
                points: vec![name(&x), name(&y)],
                distances: vec![xy, yx],
            });
        }
        let yz = space.distance(&y, &z)?;
        let xz = space.distance(&x, &z)?;
        if xz > xy + yz {
            report.record(MetricViolation {
                axiom: Axiom::Triangle,
                points: vec![name(&x), name(&y), name(&z)],
                distances: vec![xz, xy, yz],
            });
        }
    }
    Ok(report)
}

/// Points of the identity-centred balls of `radius` in every component with
/// level at most `max_level`.
pub fn exhaustive_box_triples(space: &BoxSpace, radius: u32, max_level: u32) -> Result<Vec<BoxPoint>> {
    let mut points = Vec::new();
    for &n in space.family().levels().iter().filter(|&&n| n <= max_level) {
        for g in space.family().component(n)?.group.ball(radius)? {
            points.push(BoxPoint::new(n, g));
        }
    }
    Ok(points)
}

/// Random triples mixing components; infinite components are sampled from
/// the identity-centred ball of `radius`.
pub fn verify_box_metric(space: &BoxSpace, samples: usize, seed: u64, radius: u32) -> Result<MetricReport> {
    let family = space.family();
    if family.levels().is_empty() {
        return Ok(MetricReport::default());
    }
    let pools = family.levels().iter().map(|&n| Ok((n, family.points(n, radius)?))).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| {
        let (n, pool) = &pools[rng.gen_range(0..pools.len())];
        BoxPoint::new(*n, pool.choose(rng).expect("components are nonempty").clone())
    };
    let triples: Vec<_> = (0..samples).map(|_| (pick(&mut rng), pick(&mut rng), pick(&mut rng))).collect();
    check_metric_axioms(space, triples)
}
