use std::collections::BTreeSet;

use super::vector::{BasisKey, HilbertVec};
use crate::groups::{free_product, Group, GroupElement};

/// A key permutation with signs, acting orthogonally on `HilbertVec`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LinearOp {
    /// Left translation by a group element. Acts on edge keys of the Cayley
    /// tree (free groups) and on point masses; fixes coordinate keys.
    Translate { group: Group, by: GroupElement },
    /// Negates one basis direction.
    Reflect(BasisKey),
}

impl LinearOp {
    fn inverse(&self) -> LinearOp {
        match self {
            LinearOp::Translate { group, by } => LinearOp::Translate { group: group.clone(), by: group.inverse(by) },
            LinearOp::Reflect(k) => LinearOp::Reflect(k.clone()),
        }
    }

    /// Image of a basis key, with `true` when the sign flips.
    pub fn map_key(&self, key: &BasisKey) -> (BasisKey, bool) {
        match (self, key) {
            (LinearOp::Reflect(k), key) => (key.clone(), k == key),
            (LinearOp::Translate { by: GroupElement::Free(u), .. }, BasisKey::Edge { from, gen }) => {
                let p = free_product(u, from);
                let q = free_product(&p, &[*gen]);
                if q.len() > p.len() {
                    (BasisKey::Edge { from: p, gen: *gen }, false)
                } else {
                    (BasisKey::Edge { from: q, gen: -*gen }, true)
                }
            }
            (LinearOp::Translate { group, by }, BasisKey::Elem(h)) => (BasisKey::Elem(group.mul(by, h)), false),
            (LinearOp::Translate { .. }, key) => (key.clone(), false),
        }
    }
}

/// Composition `ops[0] ∘ ops[1] ∘ ...` of signed key permutations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinearPart {
    ops: Vec<LinearOp>,
}

impl LinearPart {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_ops(ops: Vec<LinearOp>) -> Self {
        let mut out = LinearPart::identity();
        for op in ops {
            out.push(op);
        }
        out
    }

    pub fn ops(&self) -> &[LinearOp] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// Appends `op` on the right, merging translations and cancelling
    /// repeated reflections.
    fn push(&mut self, op: LinearOp) {
        match (self.ops.last_mut(), op) {
            (Some(LinearOp::Translate { group: g1, by: u }), LinearOp::Translate { group: g2, by: v }) if *g1 == g2 => {
                let w = g1.mul(u, &v);
                if g1.is_identity(&w) {
                    self.ops.pop();
                } else {
                    *u = w;
                }
            }
            (Some(LinearOp::Reflect(k1)), LinearOp::Reflect(k2)) if *k1 == k2 => {
                self.ops.pop();
            }
            (_, LinearOp::Translate { group, by }) if group.is_identity(&by) => {}
            (_, op) => self.ops.push(op),
        }
    }

    pub fn compose(&self, other: &LinearPart) -> LinearPart {
        let mut out = self.clone();
        for op in &other.ops {
            out.push(op.clone());
        }
        out
    }

    pub fn inverse(&self) -> LinearPart {
        LinearPart::from_ops(self.ops.iter().rev().map(LinearOp::inverse).collect())
    }

    pub fn map_key(&self, key: &BasisKey) -> (BasisKey, bool) {
        let mut key = key.clone();
        let mut flip = false;
        for op in self.ops.iter().rev() {
            let (k, f) = op.map_key(&key);
            key = k;
            flip ^= f;
        }
        (key, flip)
    }

    pub fn apply(&self, v: &HilbertVec) -> HilbertVec {
        if self.is_identity() {
            return v.clone();
        }
        v.relabel(|k| self.map_key(k))
    }

    /// Keys on which the map is not described by a translation alone.
    pub fn reflected_keys(&self) -> impl Iterator<Item = &BasisKey> {
        self.ops.iter().filter_map(|op| match op {
            LinearOp::Reflect(k) => Some(k),
            LinearOp::Translate { .. } => None,
        })
    }
}

/// `v ↦ translation + linear(v)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AffineIsometry {
    pub linear: LinearPart,
    pub translation: HilbertVec,
}

impl AffineIsometry {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn translation(b: HilbertVec) -> Self {
        AffineIsometry { linear: LinearPart::identity(), translation: b }
    }

    pub fn new(linear: LinearPart, translation: HilbertVec) -> Self {
        AffineIsometry { linear, translation }
    }

    pub fn apply(&self, v: &HilbertVec) -> HilbertVec {
        self.translation.add(&self.linear.apply(v))
    }

    /// `self ∘ other = (b + L(b'), L ∘ L')`.
    pub fn compose(&self, other: &AffineIsometry) -> AffineIsometry {
        AffineIsometry {
            linear: self.linear.compose(&other.linear),
            translation: self.translation.add(&self.linear.apply(&other.translation)),
        }
    }

    pub fn inverse(&self) -> AffineIsometry {
        let linear = self.linear.inverse();
        let translation = linear.apply(&self.translation).neg();
        AffineIsometry { linear, translation }
    }

    /// Keys where this map can differ from a pure translation by its own
    /// vector: the translation support plus every reflected direction.
    pub fn touched_keys(&self) -> BTreeSet<BasisKey> {
        let mut out: BTreeSet<BasisKey> = self.translation.support().cloned().collect();
        out.extend(self.linear.reflected_keys().cloned());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use crate::Rational;

    fn f2() -> Group {
        Group::new(GroupSpec::Free(2)).unwrap()
    }

    #[test]
    fn tree_translation_flips_edges_toward_identity() {
        let g = f2();
        // e -> a translated by a^-1 is A -> e, the reverse of the key (e, A)
        let op = LinearOp::Translate { group: g, by: GroupElement::Free(vec![-1]) };
        let (k, flip) = op.map_key(&BasisKey::Edge { from: vec![], gen: 1 });
        assert_eq!(k, BasisKey::Edge { from: vec![], gen: -1 });
        assert!(flip);
    }

    #[test]
    fn composition_and_inverse() {
        let g = f2();
        let a = AffineIsometry::new(
            LinearPart::from_ops(vec![LinearOp::Translate { group: g.clone(), by: GroupElement::Free(vec![1, 2]) }]),
            HilbertVec::unit(BasisKey::Edge { from: vec![], gen: 1 }),
        );
        let id = a.compose(&a.inverse());
        assert_eq!(id, AffineIsometry::identity());
        let v = HilbertVec::from_entries([
            (BasisKey::Edge { from: vec![2], gen: -1 }, Rational::from_integer(3)),
            (BasisKey::Coord(0), Rational::from_integer(1)),
        ]);
        assert_eq!(a.apply(&a.inverse().apply(&v)), v);
        assert_eq!(a.linear.apply(&v).norm_sq(), v.norm_sq());
    }

    #[test]
    fn reflections_cancel_in_pairs() {
        let k = BasisKey::Coord(2);
        let l = LinearPart::from_ops(vec![LinearOp::Reflect(k.clone()), LinearOp::Reflect(k.clone())]);
        assert!(l.is_identity());
        let once = LinearPart::from_ops(vec![LinearOp::Reflect(k.clone())]);
        assert_eq!(once.apply(&HilbertVec::unit(k.clone())), HilbertVec::unit(k).neg());
    }
}
