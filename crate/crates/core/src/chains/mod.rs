//! Nested normal subgroup chains `G = G_0 ⊃ G_1 ⊃ ... ⊃ G_N`, their
//! quotient metrics, box families and the box space metric.
//!
//! Every shipped chain has catalog quotients, so `π_n(g)` is a catalog
//! element and the quotient length `l_n` is the word length of `π_n(g)`
//! with respect to the image generators. The min-over-coset definition
//! `l_n([g]) = min { l(gh) : h ∈ G_n }` is kept as a test oracle.

mod boxspace;

pub use boxspace::{
    check_metric_axioms, exhaustive_box_triples, verify_box_metric, Axiom, BoxFamily, BoxPoint, BoxSpace, MetricReport,
    MetricSpace, MetricViolation,
};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_integer::{gcd, Roots};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{free_reduce, split_call, Group, GroupElement, GroupSpec};

/// Named chain constructors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainSpec {
    /// `G_n = 2^n G` on lattices and finite abelian groups.
    Pow2 { levels: u32 },
    /// Lower central series `γ_2 ⊃ γ_3` of the free group of rank two.
    Lcs { levels: u32 },
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainSpec::Pow2 { levels } => write!(f, "pow2(levels={levels})"),
            ChainSpec::Lcs { levels } => write!(f, "lcs(levels={levels})"),
        }
    }
}

impl FromStr for ChainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let levels = match args.as_slice() {
            [a] => {
                let v = a.strip_prefix("levels").map(|r| r.trim_start().trim_start_matches('='));
                v.unwrap_or(a).trim().parse::<u32>().map_err(|_| Error::Parse(format!("invalid level count `{a}`")))?
            }
            _ => return Err(Error::Parse(format!("`{name}` needs levels=N"))),
        };
        if levels == 0 {
            return Err(Error::Parse("a chain needs at least one level".into()));
        }
        match name.as_str() {
            "pow2" => Ok(ChainSpec::Pow2 { levels }),
            "lcs" => Ok(ChainSpec::Lcs { levels }),
            other => Err(Error::Parse(format!("unknown chain `{other}`"))),
        }
    }
}

/// How amenability of a quotient is witnessed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmenabilityWitness {
    Finite,
    FoelnerBoxes,
}

/// Largest radius `R` with `ball(R) ∩ G_n = {1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "radius")]
pub enum Separation {
    /// Exact: some nontrivial element of `G_n` has length `radius + 1`.
    Radius(u32),
    /// The ball cap was reached before a nontrivial element was found.
    AtLeast(u32),
    /// `G_n` is trivial.
    Unbounded,
}

impl Separation {
    /// Whether `ball(radius) ∩ G_n = {1}` is certified.
    pub fn separates(self, radius: u32) -> bool {
        match self {
            Separation::Radius(r) | Separation::AtLeast(r) => radius <= r,
            Separation::Unbounded => true,
        }
    }
}

#[derive(Clone, Debug)]
enum Projection {
    ReduceLattice { modulus: u64 },
    ReduceAbelian { moduli: Vec<u64> },
    Abelianize,
    Heisenberg,
}

struct Level {
    index: u32,
    quotient: Group,
    projection: Projection,
    witness: AmenabilityWitness,
    separation: OnceLock<Separation>,
    lifts: Mutex<BTreeMap<u32, Arc<HashMap<GroupElement, GroupElement>>>>,
}

struct ChainInner {
    group: Group,
    spec: ChainSpec,
    levels: Vec<Level>,
}

/// A nested chain of normal subgroups with certified finite depth.
#[derive(Clone)]
pub struct Chain {
    inner: Arc<ChainInner>,
}

impl fmt::Debug for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chain({} on {})", self.inner.spec, self.inner.group.spec())
    }
}

/// Why no shipped level separates a requested radius.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparationFailure {
    pub radius: u32,
    pub depth: u32,
    pub deepest: Separation,
}

impl fmt::Display for SeparationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no level up to depth {} separates radius {} (deepest level: {:?})",
            self.depth, self.radius, self.deepest
        )
    }
}

/// A quotient `G/G_n` with its induced length and metric.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    pub level: u32,
    pub group: Group,
}

impl QuotientSpace {
    pub fn length(&self, x: &GroupElement) -> Result<u32> {
        self.group.word_length(x)
    }

    pub fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<u32> {
        self.group.distance(x, y)
    }

    pub fn is_bounded(&self) -> bool {
        self.group.is_finite()
    }
}

impl Chain {
    pub fn new(group: Group, spec: ChainSpec) -> Result<Self> {
        let mut levels = Vec::new();
        match (&spec, group.spec()) {
            (ChainSpec::Pow2 { levels: n }, GroupSpec::IntLattice(d)) => {
                for k in 1..=*n {
                    let modulus = pow2(k)?;
                    levels.push((
                        k,
                        GroupSpec::FiniteAbelian(vec![modulus; *d]),
                        Projection::ReduceLattice { modulus },
                        AmenabilityWitness::Finite,
                    ));
                }
            }
            (ChainSpec::Pow2 { levels: n }, GroupSpec::FiniteAbelian(m)) => {
                for k in 1..=*n {
                    let p = pow2(k)?;
                    let moduli: Vec<u64> = m.iter().map(|&m| gcd(m, p)).collect();
                    levels.push((
                        k,
                        GroupSpec::FiniteAbelian(moduli.clone()),
                        Projection::ReduceAbelian { moduli },
                        AmenabilityWitness::Finite,
                    ));
                }
            }
            (ChainSpec::Lcs { levels: n }, GroupSpec::Free(2)) => {
                if *n > 2 {
                    return Err(Error::Config("the lower central series chain is shipped to depth 2".into()));
                }
                levels.push((1, GroupSpec::IntLattice(2), Projection::Abelianize, AmenabilityWitness::FoelnerBoxes));
                if *n == 2 {
                    levels.push((2, GroupSpec::Heisenberg, Projection::Heisenberg, AmenabilityWitness::FoelnerBoxes));
                }
            }
            (spec, g) => {
                return Err(Error::Config(format!("chain {spec} is not available on {g}")));
            }
        }
        let cap = group.ball_cap();
        let levels = levels
            .into_iter()
            .map(|(index, qspec, projection, witness)| {
                Ok(Level {
                    index,
                    quotient: Group::with_ball_cap(qspec, cap)?,
                    projection,
                    witness,
                    separation: OnceLock::new(),
                    lifts: Mutex::new(BTreeMap::new()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Chain { inner: Arc::new(ChainInner { group, spec, levels }) })
    }

    pub fn group(&self) -> &Group {
        &self.inner.group
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.inner.spec
    }

    /// Certified depth `N`; levels are numbered `1..=N`.
    pub fn depth(&self) -> u32 {
        self.inner.levels.len() as u32
    }

    pub fn level_indices(&self) -> Vec<u32> {
        self.inner.levels.iter().map(|l| l.index).collect()
    }

    fn level(&self, n: u32) -> Result<&Level> {
        if n == 0 || n > self.depth() {
            return Err(Error::Scope(format!("level {n} outside chain depth {}", self.depth())));
        }
        Ok(&self.inner.levels[n as usize - 1])
    }

    pub fn quotient(&self, n: u32) -> Result<QuotientSpace> {
        let level = self.level(n)?;
        Ok(QuotientSpace { level: n, group: level.quotient.clone() })
    }

    pub fn amenability_witness(&self, n: u32) -> Result<AmenabilityWitness> {
        Ok(self.level(n)?.witness)
    }

    /// The quotient map `π_n`.
    pub fn project(&self, n: u32, g: &GroupElement) -> Result<GroupElement> {
        let level = self.level(n)?;
        if !self.inner.group.contains(g) {
            return Err(Error::Structural(format!("{g} is not an element of {}", self.inner.group.spec())));
        }
        Ok(project_with(&level.projection, g))
    }

    /// Membership in `G_n`.
    pub fn contains(&self, n: u32, g: &GroupElement) -> Result<bool> {
        let q = self.project(n, g)?;
        Ok(self.level(n)?.quotient.is_identity(&q))
    }

    /// Canonical coset representative: a fixed lift of a quotient element.
    pub fn coset_rep(&self, n: u32, q: &GroupElement) -> Result<GroupElement> {
        let level = self.level(n)?;
        if !level.quotient.contains(q) {
            return Err(Error::Structural(format!("{q} is not in the level-{n} quotient")));
        }
        Ok(match (&level.projection, q) {
            (Projection::ReduceLattice { .. }, GroupElement::Abelian(r)) => {
                GroupElement::Lattice(r.iter().map(|&x| x as i64).collect())
            }
            (Projection::ReduceAbelian { .. }, GroupElement::Abelian(r)) => GroupElement::Abelian(r.clone()),
            (Projection::Abelianize, GroupElement::Lattice(v)) => {
                let mut word = Vec::new();
                for (i, &e) in v.iter().enumerate() {
                    let letter = (i + 1) as i32 * e.signum() as i32;
                    word.extend(std::iter::repeat_n(letter, e.unsigned_abs() as usize));
                }
                GroupElement::Free(word)
            }
            (Projection::Heisenberg, GroupElement::Heisenberg([x, y, z])) => {
                GroupElement::Free(heisenberg_lift(*x, *y, *z))
            }
            _ => unreachable!("projection/quotient mismatch"),
        })
    }

    /// Quotient length `l_n(π_n(g))`.
    pub fn quotient_length(&self, n: u32, g: &GroupElement) -> Result<u32> {
        let q = self.project(n, g)?;
        self.level(n)?.quotient.word_length(&q)
    }

    /// Separation radius of level `n`, computed once and cached.
    pub fn separation(&self, n: u32) -> Result<Separation> {
        let level = self.level(n)?;
        Ok(*level.separation.get_or_init(|| self.compute_separation(level)))
    }

    fn compute_separation(&self, level: &Level) -> Separation {
        let group = &self.inner.group;
        if let Projection::ReduceLattice { modulus } = level.projection {
            // the shortest nonzero vector of (mZ)^d has l1 length m
            return Separation::Radius(modulus as u32 - 1);
        }
        let mut radius = 1u32;
        loop {
            let sphere = match group.sphere(radius) {
                Ok(s) => s,
                Err(_) => return Separation::AtLeast(radius - 1),
            };
            if sphere.is_empty() {
                return Separation::Unbounded;
            }
            if sphere.iter().any(|g| level.quotient.is_identity(&project_with(&level.projection, g))) {
                return Separation::Radius(radius - 1);
            }
            radius += 1;
        }
    }

    /// Smallest level `n₀` with `ball(R) ∩ G_{n₀} = {1}`.
    pub fn separation_certificate(&self, radius: u32) -> std::result::Result<u32, SeparationFailure> {
        let mut deepest = Separation::AtLeast(0);
        for n in 1..=self.depth() {
            let sep = self.separation(n).unwrap_or(Separation::AtLeast(0));
            if sep.separates(radius) {
                return Ok(n);
            }
            deepest = sep;
        }
        Err(SeparationFailure { radius, depth: self.depth(), deepest })
    }

    /// Table mapping each quotient element reachable within `radius` to its
    /// length-lexicographically smallest lift in `ball(radius)`.
    pub fn lift_table(&self, n: u32, radius: u32) -> Result<Arc<HashMap<GroupElement, GroupElement>>> {
        let level = self.level(n)?;
        if let Some(t) = level.lifts.lock().unwrap_or_else(|e| e.into_inner()).get(&radius) {
            return Ok(t.clone());
        }
        let mut table = HashMap::new();
        for g in self.inner.group.ball(radius)? {
            table.entry(project_with(&level.projection, &g)).or_insert(g);
        }
        let table = Arc::new(table);
        level.lifts.lock().unwrap_or_else(|e| e.into_inner()).insert(radius, table.clone());
        Ok(table)
    }

    /// Nesting probe: every `g ∈ G_{n+1}` must lie in `G_n`.
    pub fn nesting_violations(&self, probes: &[GroupElement]) -> Result<Vec<(u32, GroupElement)>> {
        let mut out = Vec::new();
        for n in 1..self.depth() {
            for g in probes {
                if self.contains(n + 1, g)? && !self.contains(n, g)? {
                    out.push((n, g.clone()));
                }
            }
        }
        Ok(out)
    }

    /// Normality probe: `x g x^-1 ∈ G_n` for every member `g` and conjugator `x`.
    pub fn normality_violations(
        &self,
        n: u32,
        members: &[GroupElement],
        conjugators: &[GroupElement],
    ) -> Result<Vec<(GroupElement, GroupElement)>> {
        let grp = &self.inner.group;
        let mut out = Vec::new();
        for g in members {
            if !self.contains(n, g)? {
                continue;
            }
            for x in conjugators {
                let c = grp.mul(&grp.mul(x, g), &grp.inverse(x));
                if !self.contains(n, &c)? {
                    out.push((g.clone(), x.clone()));
                }
            }
        }
        Ok(out)
    }

    /// Homomorphism probe: `π_n(gh) = π_n(g) π_n(h)`.
    pub fn homomorphism_violations(
        &self,
        n: u32,
        pairs: &[(GroupElement, GroupElement)],
    ) -> Result<Vec<(GroupElement, GroupElement)>> {
        let grp = &self.inner.group;
        let q = &self.level(n)?.quotient;
        let mut out = Vec::new();
        for (g, h) in pairs {
            let lhs = self.project(n, &grp.mul(g, h))?;
            let rhs = q.mul(&self.project(n, g)?, &self.project(n, h)?);
            if lhs != rhs {
                out.push((g.clone(), h.clone()));
            }
        }
        Ok(out)
    }
}

fn pow2(k: u32) -> Result<u64> {
    1u64.checked_shl(k).filter(|_| k < 63).ok_or_else(|| Error::Config(format!("level {k} too deep for 2^n")))
}

fn project_with(projection: &Projection, g: &GroupElement) -> GroupElement {
    match (projection, g) {
        (Projection::ReduceLattice { modulus }, GroupElement::Lattice(v)) => {
            GroupElement::Abelian(v.iter().map(|x| x.rem_euclid(*modulus as i64) as u64).collect())
        }
        (Projection::ReduceAbelian { moduli }, GroupElement::Abelian(v)) => {
            GroupElement::Abelian(v.iter().zip(moduli).map(|(x, m)| x % m).collect())
        }
        (Projection::Abelianize, GroupElement::Free(w)) => {
            let mut v = vec![0i64; 2];
            for &l in w {
                v[l.unsigned_abs() as usize - 1] += l.signum() as i64;
            }
            GroupElement::Lattice(v)
        }
        (Projection::Heisenberg, GroupElement::Free(w)) => {
            let mut acc = [0i64; 3];
            for &l in w {
                let (dx, dy) = match l {
                    1 => (1, 0),
                    -1 => (-1, 0),
                    2 => (0, 1),
                    _ => (0, -1),
                };
                acc = [acc[0] + dx, acc[1] + dy, acc[2] + acc[0] * dy];
            }
            GroupElement::Heisenberg(acc)
        }
        _ => unreachable!("element kind does not match projection"),
    }
}

/// A word in `F_2` mapping to `(x, y, z)` under `a ↦ (1,0,0)`, `b ↦ (0,1,0)`.
///
/// `a^x b^y` reaches `(x, y, xy)`; the central remainder `k = z - xy` is
/// written as `[a^p, b^q] [a^rem, b]` with `p = isqrt|k|`, which keeps the
/// word length near `4 sqrt|k|` instead of `4|k|`.
fn heisenberg_lift(x: i64, y: i64, z: i64) -> Vec<i32> {
    let mut word = Vec::new();
    let power = |letter: i32, e: i64, word: &mut Vec<i32>| {
        let l = if e >= 0 { letter } else { -letter };
        word.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
    };
    power(1, x, &mut word);
    power(2, y, &mut word);
    let k = z - x * y;
    let commutator = |p: i64, q: i64, positive: bool, word: &mut Vec<i32>| {
        if p == 0 || q == 0 {
            return;
        }
        // [a^p, b^q] ↦ pq and [b^q, a^p] ↦ -pq
        let (first, second) = if positive { (1, 2) } else { (2, 1) };
        let (e1, e2) = if positive { (p, q) } else { (q, p) };
        power(first, e1, word);
        power(second, e2, word);
        power(first, -e1, word);
        power(second, -e2, word);
    };
    if k != 0 {
        let m = k.unsigned_abs() as i64;
        let p = m.sqrt();
        let q = m / p;
        let rem = m - p * q;
        commutator(p, q, k > 0, &mut word);
        commutator(rem, 1, k > 0, &mut word);
    }
    free_reduce(word)
}
