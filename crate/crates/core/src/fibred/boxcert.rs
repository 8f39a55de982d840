use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{
    sandwich, section_images, verify_condition2, Condition1Report, FibreOracle, FibredCce, OverlapFailure,
    OverlapWitness,
};
use crate::chains::{BoxPoint, BoxSpace};
use crate::control::Control;
use crate::error::{Error, Result};
use crate::groups::GroupElement;

/// A subset of the box space, described so that boundedness and the
/// components it meets can be decided exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoxRegion {
    Empty,
    /// Union of whole components.
    Components(Vec<u32>),
    /// Closed `d'`-ball.
    Ball {
        center: BoxPoint,
        radius: u64,
    },
    Union(Vec<BoxRegion>),
}

impl BoxRegion {
    pub fn contains(&self, space: &BoxSpace, p: &BoxPoint) -> Result<bool> {
        Ok(match self {
            BoxRegion::Empty => false,
            BoxRegion::Components(levels) => levels.contains(&p.level),
            BoxRegion::Ball { center, radius } => space.box_distance(center, p)? <= *radius,
            BoxRegion::Union(parts) => {
                for part in parts {
                    if part.contains(space, p)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Components of the space that the region meets.
    pub fn components_met(&self, space: &BoxSpace) -> Result<Vec<u32>> {
        let family = space.family();
        let mut out = BTreeSet::new();
        match self {
            BoxRegion::Empty => {}
            BoxRegion::Components(levels) => {
                out.extend(levels.iter().copied().filter(|&n| family.has_level(n)));
            }
            BoxRegion::Ball { center, radius } => {
                let lc = family.component(center.level)?.length(&center.elem)? as u64;
                out.insert(center.level);
                // the nearest point of another component is its identity coset
                for &m in family.levels() {
                    if m != center.level && lc + center.level as u64 + m as u64 <= *radius {
                        out.insert(m);
                    }
                }
            }
            BoxRegion::Union(parts) => {
                for part in parts {
                    out.extend(part.components_met(space)?);
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    pub fn is_bounded(&self, space: &BoxSpace) -> Result<bool> {
        Ok(match self {
            BoxRegion::Empty | BoxRegion::Ball { .. } => true,
            BoxRegion::Components(levels) => {
                let mut all = true;
                for &n in levels {
                    all &= space.family().component(n)?.is_bounded();
                }
                all
            }
            BoxRegion::Union(parts) => {
                let mut all = true;
                for p in parts {
                    all &= p.is_bounded(space)?;
                }
                all
            }
        })
    }
}

/// A fibred coarse embedding of the box space: bounded sets `K_r` in
/// place of the finite exclusion lists.
#[derive(Clone, Debug)]
pub struct BoxSpaceCce {
    pub label: String,
    pub space: BoxSpace,
    pub oracle: Arc<dyn FibreOracle>,
    pub rho1: Control,
    pub rho2: Control,
    pub bounded: BTreeMap<u32, BoxRegion>,
    pub max_r: u32,
}

impl BoxSpaceCce {
    pub fn k_r(&self, r: u32) -> Result<&BoxRegion> {
        if r == 0 || r > self.max_r {
            return Err(Error::Scope(format!("radius {r} outside certified range 1..={}", self.max_r)));
        }
        self.bounded.get(&r).ok_or_else(|| Error::Scope(format!("no bounded set for radius {r}")))
    }

    fn view(&self) -> FibredCce {
        FibredCce {
            label: self.label.clone(),
            family: self.space.family().clone(),
            oracle: self.oracle.clone(),
            rho1: self.rho1.clone(),
            rho2: self.rho2.clone(),
            exclusion: (1..=self.max_r).map(|r| (r, Vec::new())).collect(),
            max_r: self.max_r,
        }
    }

    /// Checks the scope of a box subset and returns its common level, or
    /// `None` when it spans several components.
    fn prepare(&self, r: u32, c: &[BoxPoint]) -> Result<Option<(u32, Vec<GroupElement>)>> {
        let k = self.k_r(r)?;
        for p in c {
            if k.contains(&self.space, p)? {
                return Err(Error::Scope(format!("{p} lies in K_{r}")));
            }
        }
        for (i, x) in c.iter().enumerate() {
            for y in &c[i + 1..] {
                if self.space.box_distance(x, y)? >= r as u64 {
                    return Err(Error::Precondition(format!("subset has diameter ≥ {r}")));
                }
            }
        }
        let Some(first) = c.first() else {
            return Err(Error::Precondition("empty subset".into()));
        };
        if c.iter().any(|p| p.level != first.level) {
            return Ok(None);
        }
        Ok(Some((first.level, c.iter().map(|p| p.elem.clone()).collect())))
    }

    pub fn verify_condition1(&self, r: u32, c: &[BoxPoint]) -> Result<Condition1Report> {
        let view = self.view();
        match self.prepare(r, c)? {
            Some((level, elems)) => {
                let (images, _, misplaced) = section_images(&view, level, &elems)?;
                sandwich(&view, level, r, &elems, &images, misplaced)
            }
            None => Ok(Condition1Report {
                level: 0,
                r,
                points: c.iter().map(|p| p.to_string()).collect(),
                distances: Vec::new(),
                attained_sq: Vec::new(),
                violations: Vec::new(),
                misplaced_sections: Vec::new(),
                spans_components: true,
            }),
        }
    }

    pub fn verify_condition2(
        &self,
        r: u32,
        c1: &[BoxPoint],
        c2: &[BoxPoint],
    ) -> Result<std::result::Result<OverlapWitness, OverlapFailure>> {
        let a = self.prepare(r, c1)?;
        let b = self.prepare(r, c2)?;
        match (a, b) {
            (Some((l1, e1)), Some((l2, e2))) if l1 == l2 => verify_condition2(&self.view(), l1, r, &e1, &e2),
            (Some((l1, _)), Some((l2, _))) => Err(Error::Precondition(format!(
                "subsets lie in different components {l1} and {l2} and cannot overlap"
            ))),
            _ => Err(Error::Structural("a subset spans several components; no trivialization exists".into())),
        }
    }
}

/// Replaces each bounded `K_r` by the finite list of components it meets.
pub fn boxspace_to_family(emb: &BoxSpaceCce) -> Result<FibredCce> {
    let mut exclusion = BTreeMap::new();
    for r in 1..=emb.max_r {
        let k = emb.k_r(r)?;
        if !k.is_bounded(&emb.space)? {
            return Err(Error::Scope(format!("K_{r} is unbounded")));
        }
        exclusion.insert(r, k.components_met(&emb.space)?);
    }
    Ok(FibredCce {
        label: format!("{} (family)", emb.label),
        family: emb.space.family().clone(),
        oracle: emb.oracle.clone(),
        rho1: emb.rho1.clone(),
        rho2: emb.rho2.clone(),
        exclusion,
        max_r: emb.max_r,
    })
}

/// Glues excluded components into `K_r`. Requires every component to be
/// bounded. Components `n, m` with `n + m < r` are also put into `K_r`,
/// so no subset of diameter `< r` outside it meets two components.
pub fn family_to_boxspace(emb: &FibredCce, space: BoxSpace) -> Result<BoxSpaceCce> {
    for &n in space.family().levels() {
        if !space.family().component(n)?.is_bounded() {
            return Err(Error::UnboundedComponent { level: n });
        }
    }
    let mut bounded = BTreeMap::new();
    for r in 1..=emb.max_r {
        let ex = emb.excluded(r)?;
        let free: Vec<u32> = space.family().levels().iter().copied().filter(|n| !ex.contains(n)).collect();
        let mut k: BTreeSet<u32> = ex.iter().copied().collect();
        for &n in &free {
            if free.iter().any(|&m| m != n && n + m < r) {
                k.insert(n);
            }
        }
        let region = if k.is_empty() { BoxRegion::Empty } else { BoxRegion::Components(k.into_iter().collect()) };
        bounded.insert(r, region);
    }
    Ok(BoxSpaceCce {
        label: format!("{} (box space)", emb.label),
        space,
        oracle: emb.oracle.clone(),
        rho1: emb.rho1.clone(),
        rho2: emb.rho2.clone(),
        bounded,
        max_r: emb.max_r,
    })
}
