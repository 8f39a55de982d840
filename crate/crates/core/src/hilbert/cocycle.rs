use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::affine::{AffineIsometry, LinearOp, LinearPart};
use super::vector::{BasisKey, HilbertVec};
use crate::control::Control;
use crate::error::{Error, Result};
use crate::groups::{Group, GroupElement, GroupSpec};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CocycleKind {
    /// `Z^d` acting on `Q^d` by translations.
    LatticeTranslation,
    /// Free group acting on edges of its Cayley tree.
    FreeWall,
    /// Finite group: `b(g) = δ_g - δ_1` in the regular representation.
    Regular,
}

impl fmt::Display for CocycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CocycleKind::LatticeTranslation => "lattice",
            CocycleKind::FreeWall => "free-wall",
            CocycleKind::Regular => "regular",
        })
    }
}

impl FromStr for CocycleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lattice" | "lattice-translation" => Ok(CocycleKind::LatticeTranslation),
            "free-wall" | "freewall" | "wall" => Ok(CocycleKind::FreeWall),
            "regular" => Ok(CocycleKind::Regular),
            other => Err(Error::Parse(format!("unknown cocycle `{other}`"))),
        }
    }
}

/// An affine isometric action `α(g) = b(g) + L(g)(·)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    group: Group,
    kind: CocycleKind,
}

impl Cocycle {
    pub fn new(group: Group, kind: CocycleKind) -> Result<Self> {
        let ok = matches!(
            (kind, group.spec()),
            (CocycleKind::LatticeTranslation, GroupSpec::IntLattice(_))
                | (CocycleKind::FreeWall, GroupSpec::Free(_))
                | (CocycleKind::Regular, GroupSpec::FiniteAbelian(_))
        );
        if !ok {
            return Err(Error::Config(format!("cocycle {kind} is not defined on {}", group.spec())));
        }
        Ok(Cocycle { group, kind })
    }

    /// The default cocycle of a catalog group, if it has one.
    pub fn default_for(group: Group) -> Result<Self> {
        let kind = match group.spec() {
            GroupSpec::IntLattice(_) => CocycleKind::LatticeTranslation,
            GroupSpec::Free(_) => CocycleKind::FreeWall,
            GroupSpec::FiniteAbelian(_) => CocycleKind::Regular,
            GroupSpec::Heisenberg => return Err(Error::Config("no catalog cocycle on the Heisenberg group".into())),
        };
        Cocycle::new(group, kind)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn kind(&self) -> CocycleKind {
        self.kind
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.group.contains(g) {
            Ok(())
        } else {
            Err(Error::Structural(format!("{g} is not an element of {}", self.group.spec())))
        }
    }

    /// Translational part `b(g)`.
    pub fn translation(&self, g: &GroupElement) -> Result<HilbertVec> {
        self.check(g)?;
        Ok(self.b(g))
    }

    pub(crate) fn b(&self, g: &GroupElement) -> HilbertVec {
        match g {
            GroupElement::Lattice(v) => HilbertVec::from_coords(v),
            GroupElement::Free(w) => HilbertVec::from_entries(
                (0..w.len()).map(|i| (BasisKey::Edge { from: w[..i].to_vec(), gen: w[i] }, Rational::from_integer(1))),
            ),
            GroupElement::Abelian(_) if self.group.is_identity(g) => HilbertVec::zero(),
            GroupElement::Abelian(_) => HilbertVec::from_entries([
                (BasisKey::Elem(g.clone()), Rational::from_integer(1)),
                (BasisKey::Elem(self.group.identity()), Rational::from_integer(-1)),
            ]),
            GroupElement::Heisenberg(_) => unreachable!("checked at construction"),
        }
    }

    /// Linear part `L(g)`.
    pub fn linear(&self, g: &GroupElement) -> Result<LinearPart> {
        self.check(g)?;
        Ok(self.l(g))
    }

    pub(crate) fn l(&self, g: &GroupElement) -> LinearPart {
        match self.kind {
            CocycleKind::LatticeTranslation => LinearPart::identity(),
            CocycleKind::FreeWall | CocycleKind::Regular => {
                LinearPart::from_ops(vec![LinearOp::Translate { group: self.group.clone(), by: g.clone() }])
            }
        }
    }

    /// `α(g)` as an affine isometry.
    pub fn action(&self, g: &GroupElement) -> Result<AffineIsometry> {
        self.check(g)?;
        Ok(self.alpha(g))
    }

    pub(crate) fn alpha(&self, g: &GroupElement) -> AffineIsometry {
        AffineIsometry::new(self.l(g), self.b(g))
    }

    /// `‖b(g)‖²`.
    pub fn norm_sq(&self, g: &GroupElement) -> Result<Rational> {
        Ok(self.translation(g)?.norm_sq())
    }
}

/// Control tables derived from `‖b‖` on a finite search ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProperProfile {
    pub rho1: Control,
    pub rho2: Control,
    /// Radius of the ball the minimum defining `ρ1` was taken over.
    pub search_radius: u32,
    /// For finite groups, the cap applied to `ρ1²` past the diameter.
    pub finite_cap: Option<Rational>,
}

/// `ρ1(x) = min{‖b(g)‖ : l(g) ≥ x}` truncated to `ball(2R)` (or the whole
/// group when finite) and `ρ2(x) = max{‖b(g)‖ : l(g) ≤ x}`, on `0..=R`.
pub fn properness_profile(c: &Cocycle, radius: u32) -> Result<ProperProfile> {
    let group = c.group();
    let (search, finite) = match group.diameter()? {
        Some(d) => (d, true),
        None => (radius.checked_mul(2).ok_or_else(|| Error::Input("radius too large".into()))?, false),
    };
    let mut by_len: BTreeMap<u32, (Rational, Rational)> = BTreeMap::new();
    for n in 0..=search {
        for g in group.sphere(n)? {
            let x = c.b(&g).norm_sq();
            let e = by_len.entry(n).or_insert((x, x));
            e.0 = e.0.min(x);
            e.1 = e.1.max(x);
        }
    }
    let overall_max = by_len.values().map(|p| p.1).max().unwrap_or_else(Rational::zero);
    let mut rho1 = Vec::with_capacity(radius as usize + 1);
    let mut rho2 = Vec::with_capacity(radius as usize + 1);
    for x in 0..=radius {
        let lo = by_len.range(x..).map(|(_, p)| p.0).min();
        rho1.push(match lo {
            Some(v) => v,
            None if finite => overall_max,
            None => return Err(Error::Input(format!("empty sphere beyond {x} in an infinite group"))),
        });
        rho2.push(by_len.range(..=x).map(|(_, p)| p.1).max().unwrap_or_else(Rational::zero));
    }
    Ok(ProperProfile {
        rho1: Control::from_squares(rho1)?,
        rho2: Control::from_squares(rho2)?,
        search_radius: search,
        finite_cap: finite.then_some(overall_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn lattice_translation_examples() {
        let g = Group::new(GroupSpec::IntLattice(2)).unwrap();
        let c = Cocycle::new(g, CocycleKind::LatticeTranslation).unwrap();
        let x = GroupElement::Lattice(vec![3, -2]);
        assert_eq!(c.translation(&x).unwrap(), HilbertVec::from_coords(&[3, -2]));
        assert_eq!(c.norm_sq(&x).unwrap(), r(13));
    }

    #[test]
    fn free_wall_norm_is_length() {
        let g = Group::new(GroupSpec::Free(2)).unwrap();
        let c = Cocycle::new(g.clone(), CocycleKind::FreeWall).unwrap();
        assert_eq!(c.norm_sq(&GroupElement::Free(vec![1, 2])).unwrap(), r(2));
        assert!(c.translation(&g.identity()).unwrap().is_zero());
    }

    #[test]
    fn profile_examples() {
        let z = Cocycle::new(Group::new(GroupSpec::IntLattice(1)).unwrap(), CocycleKind::LatticeTranslation).unwrap();
        let p = properness_profile(&z, 3).unwrap();
        assert_eq!(p.rho1.at_sq(2).unwrap(), r(4));
        assert_eq!(p.rho2.at_sq(3).unwrap(), r(9));

        let f = Cocycle::new(Group::new(GroupSpec::Free(2)).unwrap(), CocycleKind::FreeWall).unwrap();
        let p = properness_profile(&f, 4).unwrap();
        assert_eq!(p.rho2.at_sq(4).unwrap(), r(4));

        let fin = Cocycle::new(Group::new(GroupSpec::FiniteAbelian(vec![8])).unwrap(), CocycleKind::Regular).unwrap();
        let p = properness_profile(&fin, 6).unwrap();
        assert_eq!(p.finite_cap, Some(r(2)));
        assert_eq!(p.rho1.at_sq(6).unwrap(), r(2));
        assert!(p.rho1.is_monotone());
    }

    #[test]
    fn mismatched_group_is_rejected() {
        let h = Group::new(GroupSpec::Heisenberg).unwrap();
        assert!(Cocycle::new(h.clone(), CocycleKind::FreeWall).is_err());
        assert!(Cocycle::default_for(h).is_err());
    }
}
