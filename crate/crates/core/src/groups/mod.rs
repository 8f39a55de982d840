//! Catalog groups with exact element arithmetic and word-length geometry.
//!
//! Four families are supported: integer lattices `Z^d`, free groups `F_k`,
//! the integral Heisenberg group and finite abelian groups. Every group
//! carries an ordered symmetric generating set; the word length `l` and the
//! left-invariant metric `d(x, y) = l(x^-1 y)` are computed with respect to
//! it. Balls are produced by breadth-first search on the Cayley graph and
//! memoized per group; closed forms are used for word length where they
//! exist and are cross-checked against the search in tests.

mod element;

pub use element::{free_inverse, free_product, free_reduce, GroupElement};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of elements a memoized ball may hold.
pub const DEFAULT_BALL_CAP: usize = 4_000_000;

/// Catalog tag plus parameters of a group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupSpec {
    IntLattice(usize),
    Free(usize),
    Heisenberg,
    FiniteAbelian(Vec<u64>),
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::IntLattice(d) => write!(f, "intlattice({d})"),
            GroupSpec::Free(k) => write!(f, "free({k})"),
            GroupSpec::Heisenberg => write!(f, "heisenberg"),
            GroupSpec::FiniteAbelian(m) => {
                let parts: Vec<String> = m.iter().map(|x| x.to_string()).collect();
                write!(f, "finiteabelian({})", parts.join(","))
            }
        }
    }
}

/// Splits `name(a,b,...)` into the name and its comma-separated arguments.
pub(crate) fn split_call(s: &str) -> Result<(String, Vec<String>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_ascii_lowercase(), Vec::new())),
        Some(open) => {
            if !s.ends_with(')') {
                return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
            }
            let name = s[..open].trim().to_ascii_lowercase();
            let inner = &s[open + 1..s.len() - 1];
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            Ok((name, args))
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("invalid {what} `{s}`")))
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let one = |args: &[String]| -> Result<usize> {
            match args {
                [a] => parse_num(a, "rank"),
                _ => Err(Error::Parse(format!("`{name}` takes exactly one argument"))),
            }
        };
        let spec = match name.as_str() {
            "intlattice" | "lattice" | "z" => GroupSpec::IntLattice(one(&args)?),
            "free" => GroupSpec::Free(one(&args)?),
            "heisenberg" => {
                if !args.is_empty() {
                    return Err(Error::Parse("`heisenberg` takes no arguments".into()));
                }
                GroupSpec::Heisenberg
            }
            "finiteabelian" => {
                if args.is_empty() {
                    return Err(Error::Parse("`finiteabelian` needs moduli".into()));
                }
                let moduli = args.iter().map(|a| parse_num(a, "modulus")).collect::<Result<Vec<u64>>>()?;
                GroupSpec::FiniteAbelian(moduli)
            }
            other => return Err(Error::Parse(format!("unknown group `{other}`"))),
        };
        Ok(spec)
    }
}

#[derive(Default)]
struct BallCache {
    spheres: Vec<Vec<GroupElement>>,
    lengths: HashMap<GroupElement, u32>,
    /// Set once a finite group has been exhausted.
    complete: bool,
}

struct Inner {
    spec: GroupSpec,
    generators: Vec<GroupElement>,
    cap: usize,
    cache: Mutex<BallCache>,
}

/// A finitely generated catalog group.
///
/// Cheap to clone; clones share the ball cache. The cache is behind a
/// mutex so concurrent readers always observe complete spheres.
#[derive(Clone)]
pub struct Group {
    inner: Arc<Inner>,
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.inner.spec)
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.inner.spec == other.inner.spec
    }
}

impl Eq for Group {}

impl std::hash::Hash for Group {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.inner.spec.hash(state);
    }
}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Self> {
        Self::with_ball_cap(spec, DEFAULT_BALL_CAP)
    }

    pub fn with_ball_cap(spec: GroupSpec, cap: usize) -> Result<Self> {
        let generators = match &spec {
            GroupSpec::IntLattice(d) => {
                if *d == 0 {
                    return Err(Error::Input("lattice rank must be at least 1".into()));
                }
                let mut gens = Vec::new();
                for i in 0..*d {
                    for sign in [1, -1] {
                        let mut v = vec![0; *d];
                        v[i] = sign;
                        gens.push(GroupElement::Lattice(v));
                    }
                }
                gens
            }
            GroupSpec::Free(k) => {
                if *k == 0 || *k > 26 {
                    return Err(Error::Input("free rank must be in 1..=26".into()));
                }
                (1..=*k as i32).flat_map(|i| [GroupElement::Free(vec![i]), GroupElement::Free(vec![-i])]).collect()
            }
            GroupSpec::Heisenberg => vec![
                GroupElement::Heisenberg([1, 0, 0]),
                GroupElement::Heisenberg([-1, 0, 0]),
                GroupElement::Heisenberg([0, 1, 0]),
                GroupElement::Heisenberg([0, -1, 0]),
            ],
            GroupSpec::FiniteAbelian(moduli) => {
                if moduli.is_empty() || moduli.contains(&0) {
                    return Err(Error::Input("finite abelian moduli must be positive".into()));
                }
                let mut gens: Vec<GroupElement> = Vec::new();
                for (i, &m) in moduli.iter().enumerate() {
                    if m == 1 {
                        continue;
                    }
                    for r in [1, m - 1] {
                        let mut v = vec![0; moduli.len()];
                        v[i] = r;
                        let g = GroupElement::Abelian(v);
                        if !gens.contains(&g) {
                            gens.push(g);
                        }
                    }
                }
                gens
            }
        };
        Ok(Group { inner: Arc::new(Inner { spec, generators, cap, cache: Mutex::new(BallCache::default()) }) })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.inner.spec
    }

    pub fn ball_cap(&self) -> usize {
        self.inner.cap
    }

    /// Ordered symmetric generating set (each generator followed by its inverse).
    pub fn generators(&self) -> &[GroupElement] {
        &self.inner.generators
    }

    pub fn identity(&self) -> GroupElement {
        match &self.inner.spec {
            GroupSpec::IntLattice(d) => GroupElement::Lattice(vec![0; *d]),
            GroupSpec::Free(_) => GroupElement::Free(Vec::new()),
            GroupSpec::Heisenberg => GroupElement::Heisenberg([0, 0, 0]),
            GroupSpec::FiniteAbelian(m) => GroupElement::Abelian(vec![0; m.len()]),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.inner.spec, GroupSpec::FiniteAbelian(_))
    }

    /// Number of elements, for finite groups.
    pub fn order(&self) -> Option<u64> {
        match &self.inner.spec {
            GroupSpec::FiniteAbelian(m) => Some(m.iter().product()),
            _ => None,
        }
    }

    /// Whether `g` is a well-formed element of this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (&self.inner.spec, g) {
            (GroupSpec::IntLattice(d), GroupElement::Lattice(v)) => v.len() == *d,
            (GroupSpec::Free(k), GroupElement::Free(w)) => {
                let k = *k as i32;
                w.iter().all(|&l| l != 0 && l.abs() <= k) && w.windows(2).all(|p| p[0] != -p[1])
            }
            (GroupSpec::Heisenberg, GroupElement::Heisenberg(_)) => true,
            (GroupSpec::FiniteAbelian(m), GroupElement::Abelian(v)) => {
                v.len() == m.len() && v.iter().zip(m).all(|(r, m)| r < m)
            }
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::Structural(format!("element {g} ({}) does not belong to {}", g.kind(), self.inner.spec)))
        }
    }

    /// Exact product `g h`.
    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul(g, h))
    }

    /// Product without membership checks; both arguments must belong to the group.
    pub(crate) fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (g, h) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                GroupElement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Free(a), GroupElement::Free(b)) => GroupElement::Free(free_product(a, b)),
            (GroupElement::Heisenberg(a), GroupElement::Heisenberg(b)) => {
                GroupElement::Heisenberg([a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]])
            }
            (GroupElement::Abelian(a), GroupElement::Abelian(b)) => {
                let GroupSpec::FiniteAbelian(m) = &self.inner.spec else {
                    unreachable!("abelian element in non-abelian group")
                };
                GroupElement::Abelian(a.iter().zip(b).zip(m).map(|((x, y), m)| (x + y) % m).collect())
            }
            _ => unreachable!("mixed element kinds"),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        match g {
            GroupElement::Lattice(a) => GroupElement::Lattice(a.iter().map(|x| -x).collect()),
            GroupElement::Free(w) => GroupElement::Free(free_inverse(w)),
            GroupElement::Heisenberg([x, y, z]) => GroupElement::Heisenberg([-x, -y, -z + x * y]),
            GroupElement::Abelian(a) => {
                let GroupSpec::FiniteAbelian(m) = &self.inner.spec else {
                    unreachable!("abelian element in non-abelian group")
                };
                GroupElement::Abelian(a.iter().zip(m).map(|(x, m)| (m - x) % m).collect())
            }
        }
    }

    /// `g^n` for any integer `n`.
    pub fn pow(&self, g: &GroupElement, n: i64) -> GroupElement {
        let base = if n < 0 { self.inverse(g) } else { g.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    /// Product of a sequence of generator indices into [`Group::generators`].
    pub fn evaluate_word(&self, word: &[usize]) -> GroupElement {
        word.iter().fold(self.identity(), |acc, &i| self.mul(&acc, &self.inner.generators[i]))
    }

    /// Word length with respect to the generating set.
    ///
    /// Closed forms are used for lattices (l1 norm), free groups (reduced
    /// word length) and finite abelian groups (sum of cyclic distances); the
    /// Heisenberg group is resolved by breadth-first search.
    pub fn word_length(&self, g: &GroupElement) -> Result<u32> {
        self.check(g)?;
        match (&self.inner.spec, g) {
            (_, GroupElement::Lattice(v)) => Ok(v.iter().map(|x| x.unsigned_abs()).sum::<u64>() as u32),
            (_, GroupElement::Free(w)) => Ok(w.len() as u32),
            (GroupSpec::FiniteAbelian(m), GroupElement::Abelian(v)) => {
                Ok(v.iter().zip(m).map(|(r, m)| (*r).min(m - r)).sum::<u64>() as u32)
            }
            _ => self.bfs_word_length(g),
        }
    }

    /// `d(x, y) = l(x^-1 y)`.
    pub fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<u32> {
        self.check(x)?;
        self.check(y)?;
        self.word_length(&self.mul(&self.inverse(x), y))
    }

    fn lock(&self) -> MutexGuard<'_, BallCache> {
        self.inner.cache.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn grow(&self, cache: &mut BallCache, radius: usize) -> Result<()> {
        if cache.spheres.is_empty() {
            let e = self.identity();
            cache.lengths.insert(e.clone(), 0);
            cache.spheres.push(vec![e]);
        }
        while cache.spheres.len() <= radius && !cache.complete {
            let n = cache.spheres.len() as u32;
            let mut next = Vec::new();
            for s in cache.spheres.last().expect("nonempty") {
                for gen in &self.inner.generators {
                    let p = self.mul(s, gen);
                    if !cache.lengths.contains_key(&p) {
                        cache.lengths.insert(p.clone(), n);
                        next.push(p);
                    }
                }
            }
            if cache.lengths.len() > self.inner.cap {
                // roll back the partial sphere so the cache stays consistent
                for p in &next {
                    cache.lengths.remove(p);
                }
                return Err(Error::ResourceCap {
                    what: format!("ball of radius {n} in {}", self.inner.spec),
                    cap: self.inner.cap,
                });
            }
            if next.is_empty() {
                cache.complete = true;
            } else {
                next.sort();
                cache.spheres.push(next);
            }
        }
        Ok(())
    }

    /// Word length by breadth-first search alone (no closed forms).
    pub fn bfs_word_length(&self, g: &GroupElement) -> Result<u32> {
        self.check(g)?;
        let mut cache = self.lock();
        loop {
            if let Some(&n) = cache.lengths.get(g) {
                return Ok(n);
            }
            if cache.complete {
                return Err(Error::Structural(format!("{g} unreachable from the identity")));
            }
            let next = cache.spheres.len();
            self.grow(&mut cache, next)?;
        }
    }

    /// Elements of length exactly `n`, in normal-form order.
    pub fn sphere(&self, n: u32) -> Result<Vec<GroupElement>> {
        let mut cache = self.lock();
        self.grow(&mut cache, n as usize)?;
        Ok(cache.spheres.get(n as usize).cloned().unwrap_or_default())
    }

    /// All elements with `l(g) <= radius`, in length-lexicographic order.
    pub fn ball(&self, radius: u32) -> Result<Vec<GroupElement>> {
        let mut cache = self.lock();
        self.grow(&mut cache, radius as usize)?;
        Ok(cache.spheres.iter().take(radius as usize + 1).flat_map(|s| s.iter().cloned()).collect())
    }

    /// Largest word length attained, for finite groups.
    pub fn diameter(&self) -> Result<Option<u32>> {
        if !self.is_finite() {
            return Ok(None);
        }
        let mut cache = self.lock();
        let mut r = cache.spheres.len();
        while !cache.complete {
            self.grow(&mut cache, r)?;
            r += 1;
        }
        Ok(Some(cache.spheres.len() as u32 - 1))
    }

    /// Every element of a finite group, length-lexicographically ordered.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        match self.diameter()? {
            Some(d) => self.ball(d),
            None => Err(Error::Input(format!("{} is infinite", self.inner.spec))),
        }
    }

    /// Length-lexicographic comparison.
    pub fn length_lex_cmp(&self, g: &GroupElement, h: &GroupElement) -> Result<std::cmp::Ordering> {
        Ok(self.word_length(g)?.cmp(&self.word_length(h)?).then_with(|| g.cmp(h)))
    }

    /// Parses an element written in the same notation [`GroupElement`] displays.
    pub fn parse_element(&self, s: &str) -> Result<GroupElement> {
        let s = s.trim();
        let ints = |s: &str| -> Result<Vec<i64>> {
            let body = s.trim_matches(|c| c == '(' || c == ')' || c == '[' || c == ']');
            if body.trim().is_empty() {
                return Ok(Vec::new());
            }
            body.split(',').map(|x| parse_num(x, "coordinate")).collect()
        };
        let g = match &self.inner.spec {
            GroupSpec::IntLattice(_) => GroupElement::Lattice(ints(s)?),
            GroupSpec::Free(_) => {
                if s == "e" || s == "1" || s.is_empty() {
                    GroupElement::Free(Vec::new())
                } else {
                    let mut letters = Vec::new();
                    for c in s.chars() {
                        let l = match c {
                            'a'..='z' => (c as u8 - b'a') as i32 + 1,
                            'A'..='Z' => -((c as u8 - b'A') as i32 + 1),
                            _ => return Err(Error::Parse(format!("bad letter `{c}` in `{s}`"))),
                        };
                        letters.push(l);
                    }
                    GroupElement::Free(free_reduce(letters))
                }
            }
            GroupSpec::Heisenberg => match ints(s)?.as_slice() {
                [x, y, z] => GroupElement::Heisenberg([*x, *y, *z]),
                _ => return Err(Error::Parse(format!("expected (x,y,z), got `{s}`"))),
            },
            GroupSpec::FiniteAbelian(m) => {
                let v = ints(s)?;
                if v.len() != m.len() {
                    return Err(Error::Parse(format!("expected {} residues in `{s}`", m.len())));
                }
                GroupElement::Abelian(v.iter().zip(m).map(|(x, m)| x.rem_euclid(*m as i64) as u64).collect())
            }
        };
        self.check(&g)?;
        Ok(g)
    }
}
