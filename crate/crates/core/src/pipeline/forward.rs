use std::collections::BTreeMap;
use std::sync::Arc;

use super::scope_err;
use crate::chains::{BoxFamily, BoxPoint, Chain};
use crate::error::{Error, Result};
use crate::fibred::{FibreOracle, FibrePoint, FibredCce};
use crate::groups::GroupElement;
use crate::hilbert::{properness_profile, AffineIsometry, Cocycle};
use crate::Rational;

/// Fibres, section and basepoint trivializations built from a cocycle.
///
/// The fibre over `[a] ∈ G/G_n` is the orbit space of `π_n^-1([a]) × H`
/// under `g·(x, y) = (gx, α(g)y)`, `g ∈ G_n`. Every orbit has exactly one
/// member with `x` equal to the coset representative, so fibre points are
/// stored as that `y`.
#[derive(Clone, Debug)]
pub struct CocycleOracle {
    chain: Chain,
    cocycle: Cocycle,
}

impl CocycleOracle {
    pub fn new(chain: Chain, cocycle: Cocycle) -> Result<Self> {
        if chain.group() != cocycle.group() {
            return Err(Error::Structural(format!(
                "cocycle on {} does not match chain on {}",
                cocycle.group().spec(),
                chain.group().spec()
            )));
        }
        Ok(CocycleOracle { chain, cocycle })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    /// Canonicalizes an arbitrary orbit member `(x, y)` of the fibre over `[x]`.
    pub fn canonicalize(&self, level: u32, x: &GroupElement, y: &crate::hilbert::HilbertVec) -> Result<FibrePoint> {
        let g = self.chain.group();
        let q = self.chain.project(level, x)?;
        let rep = self.chain.coset_rep(level, &q)?;
        let h = g.mul(&rep, &g.inverse(x));
        Ok(FibrePoint { base: BoxPoint::new(level, q), y: self.cocycle.alpha(&h).apply(y), rep })
    }

    /// Basepoint `z`: the coset representative of the smallest member of `C`.
    pub fn basepoint(&self, level: u32, c: &[GroupElement]) -> Result<GroupElement> {
        let first =
            c.iter().min().ok_or_else(|| Error::Precondition("trivialization needs a nonempty subset".into()))?;
        self.chain.coset_rep(level, first)
    }

    /// The lift `a_0` of `[a] ∈ C`: the preimage closest to the basepoint.
    pub fn lift(&self, level: u32, c: &[GroupElement], x: &GroupElement) -> Result<GroupElement> {
        if !c.contains(x) {
            return Err(Error::Precondition(format!("{x} is not a member of the subset")));
        }
        let g = self.chain.group();
        let z = self.basepoint(level, c)?;
        let quotient = self.chain.quotient(level)?.group;
        let pz = self.chain.project(level, &z)?;
        let step = quotient.mul(&quotient.inverse(&pz), x);
        let len = quotient.word_length(&step)?;
        let table = self.chain.lift_table(level, len)?;
        let w = table.get(&step).ok_or_else(|| Error::Structural(format!("no lift of {step} within radius {len}")))?;
        Ok(g.mul(&z, w))
    }
}

impl FibreOracle for CocycleOracle {
    fn describe(&self) -> String {
        format!("cocycle[{}]", self.cocycle.kind())
    }

    fn fibre_base(&self, level: u32, x: &GroupElement) -> Result<BoxPoint> {
        Ok(BoxPoint::new(level, x.clone()))
    }

    /// `s([a]) = [(a, b(a))]`, canonically `(rep, b(rep))`.
    fn section(&self, level: u32, x: &GroupElement) -> Result<FibrePoint> {
        let rep = self.chain.coset_rep(level, x)?;
        Ok(FibrePoint { base: BoxPoint::new(level, x.clone()), y: self.cocycle.b(&rep), rep })
    }

    /// `t_C([a]) : [(x, y)] ↦ α(a_0 x^-1)(y)` with `x` the representative.
    fn chart(&self, level: u32, c: &[GroupElement], x: &GroupElement) -> Result<AffineIsometry> {
        let a0 = self.lift(level, c, x)?;
        let rep = self.chain.coset_rep(level, x)?;
        let g = self.chain.group();
        Ok(self.cocycle.alpha(&g.mul(&a0, &g.inverse(&rep))))
    }
}

/// Builds the certificate: `n_r` is the smallest level whose subgroup
/// avoids `ball(3r)`, `𝒦_r` the levels below it, and the controls come
/// from the properness profile of the cocycle on `0..=max_r`.
pub fn forward(chain: &Chain, cocycle: &Cocycle, max_r: u32) -> Result<FibredCce> {
    if max_r == 0 {
        return Err(Error::Input("forward construction needs max_r ≥ 1".into()));
    }
    let oracle = CocycleOracle::new(chain.clone(), cocycle.clone())?;
    let family = BoxFamily::new(chain.clone());
    let mut exclusion = BTreeMap::new();
    for r in 1..=max_r {
        let n_r = chain
            .separation_certificate(3 * r)
            .map_err(|f| scope_err(format!("forward construction at r = {r}: {f}")))?;
        exclusion.insert(r, family.levels().iter().copied().filter(|&n| n < n_r).collect());
    }
    let profile = properness_profile(cocycle, max_r)?;
    Ok(FibredCce {
        label: format!("forward[{}, {}, {}]", chain.group().spec(), chain.spec(), cocycle.kind()),
        family,
        oracle: Arc::new(oracle),
        rho1: profile.rho1,
        rho2: profile.rho2,
        exclusion,
        max_r,
    })
}

/// Pairs of `C` where the attained squared distance differs from
/// `‖b(a_x^-1 a_y)‖²`.
pub fn attained_mismatches(
    oracle: &CocycleOracle,
    level: u32,
    c: &[GroupElement],
) -> Result<Vec<(GroupElement, GroupElement, Rational, Rational)>> {
    let g = oracle.chain.group();
    let mut images = Vec::with_capacity(c.len());
    let mut lifts = Vec::with_capacity(c.len());
    for x in c {
        let s = oracle.section(level, x)?;
        images.push(oracle.chart(level, c, x)?.apply(&s.y));
        lifts.push(oracle.lift(level, c, x)?);
    }
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let attained = images[i].sub(&images[j]).norm_sq();
            let expected = oracle.cocycle.b(&g.mul(&g.inverse(&lifts[i]), &lifts[j])).norm_sq();
            if attained != expected {
                out.push((c[i].clone(), c[j].clone(), attained, expected));
            }
        }
    }
    Ok(out)
}
