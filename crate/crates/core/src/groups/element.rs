use std::fmt;

/// An element of a catalog group, stored in exact normal form.
///
/// The derived ordering compares normal forms lexicographically; combined
/// with word length it gives the length-lexicographic order used for every
/// deterministic choice in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    /// Integer vector in `Z^d`.
    Lattice(Vec<i64>),
    /// Freely reduced word. Letter `i` is the `i`-th generator, `-i` its inverse.
    Free(Vec<i32>),
    /// Heisenberg triple `(x, y, z)` with `(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y')`.
    Heisenberg([i64; 3]),
    /// Residue vector, each entry in `0..modulus`.
    Abelian(Vec<u64>),
}

impl GroupElement {
    pub fn kind(&self) -> &'static str {
        match self {
            GroupElement::Lattice(_) => "lattice",
            GroupElement::Free(_) => "free",
            GroupElement::Heisenberg(_) => "heisenberg",
            GroupElement::Abelian(_) => "abelian",
        }
    }
}

/// Free reduction of a word: cancels adjacent `s s^-1` pairs.
pub fn free_reduce<I: IntoIterator<Item = i32>>(word: I) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for letter in word {
        if out.last() == Some(&-letter) {
            out.pop();
        } else {
            out.push(letter);
        }
    }
    out
}

/// Product of two reduced words, reduced.
pub fn free_product(u: &[i32], v: &[i32]) -> Vec<i32> {
    let mut cancel = 0;
    while cancel < u.len() && cancel < v.len() && u[u.len() - 1 - cancel] == -v[cancel] {
        cancel += 1;
    }
    let mut out = Vec::with_capacity(u.len() + v.len() - 2 * cancel);
    out.extend_from_slice(&u[..u.len() - cancel]);
    out.extend_from_slice(&v[cancel..]);
    out
}

pub fn free_inverse(u: &[i32]) -> Vec<i32> {
    u.iter().rev().map(|l| -l).collect()
}

fn letter_char(letter: i32) -> char {
    let base = (letter.unsigned_abs() - 1) as u8;
    if letter > 0 {
        (b'a' + base) as char
    } else {
        (b'A' + base) as char
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => write!(f, "({})", join(v)),
            GroupElement::Free(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Free(w) => {
                for &l in w {
                    write!(f, "{}", letter_char(l))?;
                }
                Ok(())
            }
            GroupElement::Heisenberg(t) => write!(f, "({},{},{})", t[0], t[1], t[2]),
            GroupElement::Abelian(v) => write!(f, "[{}]", join(v)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_cancels_nested_pairs() {
        assert_eq!(free_reduce([1, 2, -2, -1, 2]), vec![2]);
        assert_eq!(free_reduce([1, -1]), Vec::<i32>::new());
    }

    #[test]
    fn product_matches_reduce_of_concat() {
        let u = vec![1, 2, -1];
        let v = vec![1, -2, 2, 2];
        let v = free_reduce(v);
        let mut cat = u.clone();
        cat.extend(&v);
        assert_eq!(free_product(&u, &v), free_reduce(cat));
    }

    #[test]
    fn display_uses_letters() {
        assert_eq!(GroupElement::Free(vec![1, 2, -1, -2]).to_string(), "abAB");
        assert_eq!(GroupElement::Free(vec![]).to_string(), "e");
        assert_eq!(GroupElement::Lattice(vec![3, -2]).to_string(), "(3,-2)");
    }
}
