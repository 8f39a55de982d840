use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::groups::GroupElement;
use crate::Rational;

/// Basis label of the sparse Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKey {
    /// Standard coordinate `e_i` of a finite-dimensional lattice space.
    Coord(u32),
    /// Cayley-tree edge from the vertex `from` to `from·gen`, stored so that
    /// `from` is the endpoint closer to the identity.
    Edge { from: Vec<i32>, gen: i32 },
    /// Point mass at a group element (regular representation).
    Elem(GroupElement),
}

impl fmt::Display for BasisKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKey::Coord(i) => write!(f, "e{i}"),
            BasisKey::Edge { from, gen } => {
                write!(f, "edge({},{})", GroupElement::Free(from.clone()), GroupElement::Free(vec![*gen]))
            }
            BasisKey::Elem(g) => write!(f, "delta{g}"),
        }
    }
}

/// A finitely supported vector with exact rational entries. Zero entries
/// are never stored, so structural equality is vector equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HilbertVec {
    entries: BTreeMap<BasisKey, Rational>,
}

impl HilbertVec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(key: BasisKey) -> Self {
        let mut v = Self::zero();
        v.add_entry(key, Rational::from_integer(1));
        v
    }

    /// Sums duplicate keys and drops zeros.
    pub fn from_entries<I: IntoIterator<Item = (BasisKey, Rational)>>(entries: I) -> Self {
        let mut v = Self::zero();
        for (k, x) in entries {
            v.add_entry(k, x);
        }
        v
    }

    /// Vector with coordinates `e_0, e_1, ...`.
    pub fn from_coords(coords: &[i64]) -> Self {
        Self::from_entries(
            coords.iter().enumerate().map(|(i, &x)| (BasisKey::Coord(i as u32), Rational::from_integer(x))),
        )
    }

    pub fn add_entry(&mut self, key: BasisKey, value: Rational) {
        if value.is_zero() {
            return;
        }
        match self.entries.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = *e.get() + value;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn get(&self, key: &BasisKey) -> Rational {
        self.entries.get(key).copied().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisKey, &Rational)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &BasisKey> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &HilbertVec) -> HilbertVec {
        let (big, small) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let mut out = big.clone();
        for (k, x) in small.iter() {
            out.add_entry(k.clone(), *x);
        }
        out
    }

    pub fn sub(&self, other: &HilbertVec) -> HilbertVec {
        let mut out = self.clone();
        for (k, x) in other.iter() {
            out.add_entry(k.clone(), -*x);
        }
        out
    }

    pub fn scale(&self, c: Rational) -> HilbertVec {
        if c.is_zero() {
            return HilbertVec::zero();
        }
        HilbertVec { entries: self.entries.iter().map(|(k, x)| (k.clone(), *x * c)).collect() }
    }

    pub fn neg(&self) -> HilbertVec {
        self.scale(Rational::from_integer(-1))
    }

    pub fn dot(&self, other: &HilbertVec) -> Rational {
        let (big, small) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        small.iter().filter_map(|(k, x)| big.entries.get(k).map(|y| *x * *y)).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn norm_sq(&self) -> Rational {
        self.entries.values().fold(Rational::zero(), |a, x| a + *x * *x)
    }

    /// Largest absolute coordinate, zero for the empty vector.
    pub fn max_abs(&self) -> Rational {
        self.entries.values().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// Rebuilds the vector with every key passed through a signed relabelling.
    pub(crate) fn relabel<F>(&self, mut f: F) -> HilbertVec
    where
        F: FnMut(&BasisKey) -> (BasisKey, bool),
    {
        let mut out = HilbertVec::zero();
        for (k, x) in self.iter() {
            let (k2, flip) = f(k);
            out.add_entry(k2, if flip { -*x } else { *x });
        }
        out
    }
}

impl fmt::Display for HilbertVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.iter().map(|(k, x)| format!("{}*{}", crate::rational::format(x), k)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}
