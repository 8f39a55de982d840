use std::collections::{HashMap, VecDeque};

use proptest::prelude::*;
use rabox::groups::{Group, GroupElement, GroupSpec};
use rabox::Error;

fn catalog() -> Vec<Group> {
    [
        GroupSpec::IntLattice(1),
        GroupSpec::IntLattice(2),
        GroupSpec::Free(2),
        GroupSpec::Heisenberg,
        GroupSpec::FiniteAbelian(vec![8, 8]),
        GroupSpec::FiniteAbelian(vec![2, 6]),
    ]
    .into_iter()
    .map(|s| Group::new(s).unwrap())
    .collect()
}

/// Breadth-first lengths in the Heisenberg group with its own product,
/// generators `(±1,0,0)`, `(0,±1,0)`.
fn heisenberg_lengths(radius: u32) -> HashMap<[i64; 3], u32> {
    let mul = |a: [i64; 3], b: [i64; 3]| [a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]];
    let gens = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];
    let mut dist = HashMap::from([([0, 0, 0], 0)]);
    let mut queue = VecDeque::from([[0i64, 0, 0]]);
    while let Some(g) = queue.pop_front() {
        let d = dist[&g];
        if d == radius {
            continue;
        }
        for s in gens {
            let h = mul(g, s);
            dist.entry(h).or_insert_with(|| {
                queue.push_back(h);
                d + 1
            });
        }
    }
    dist
}

#[test]
fn heisenberg_lengths_match_independent_bfs() {
    let h = Group::new(GroupSpec::Heisenberg).unwrap();
    let oracle = heisenberg_lengths(6);
    assert_eq!(h.ball(6).unwrap().len(), oracle.len());
    for (g, d) in oracle {
        assert_eq!(h.word_length(&GroupElement::Heisenberg(g)).unwrap(), d, "{g:?}");
    }
}

#[test]
fn lattice_ball_sizes() {
    // |ball_r(Z^2)| = 2r^2 + 2r + 1
    let z2 = Group::new(GroupSpec::IntLattice(2)).unwrap();
    for r in 0..6u32 {
        assert_eq!(z2.ball(r).unwrap().len() as u32, 2 * r * r + 2 * r + 1);
    }
}

#[test]
fn free_sphere_sizes() {
    // |S_n(F_2)| = 4 * 3^(n-1)
    let f2 = Group::new(GroupSpec::Free(2)).unwrap();
    for n in 1..6u32 {
        assert_eq!(f2.sphere(n).unwrap().len() as u32, 4 * 3u32.pow(n - 1));
    }
}

#[test]
fn finite_abelian_is_exhausted() {
    let g = Group::new(GroupSpec::FiniteAbelian(vec![8, 8])).unwrap();
    assert_eq!(g.elements().unwrap().len(), 64);
    assert_eq!(g.diameter().unwrap(), Some(8));
}

#[test]
fn ball_cap_is_an_error() {
    let f2 = Group::with_ball_cap(GroupSpec::Free(2), 100).unwrap();
    assert!(matches!(f2.ball(6), Err(Error::ResourceCap { .. })));
    // the cache survives the failed request
    assert_eq!(f2.ball(2).unwrap().len(), 17);
}

#[test]
fn elements_display_and_parse() {
    for g in catalog() {
        for x in g.ball(3).unwrap() {
            assert_eq!(g.parse_element(&x.to_string()).unwrap(), x);
        }
    }
}

#[test]
fn specs_parse() {
    assert_eq!("intlattice(2)".parse::<GroupSpec>().unwrap(), GroupSpec::IntLattice(2));
    assert_eq!("free(2)".parse::<GroupSpec>().unwrap(), GroupSpec::Free(2));
    assert_eq!("heisenberg".parse::<GroupSpec>().unwrap(), GroupSpec::Heisenberg);
    assert_eq!("finiteabelian(8,8)".parse::<GroupSpec>().unwrap(), GroupSpec::FiniteAbelian(vec![8, 8]));
    assert!("sl(2)".parse::<GroupSpec>().is_err());
}

fn reduce(word: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for &s in word {
        if out.last() == Some(&-s) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

fn words() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (
        0..6usize,
        prop::collection::vec(0..4usize, 0..10),
        prop::collection::vec(0..4usize, 0..10),
        prop::collection::vec(0..4usize, 0..10),
    )
}

proptest! {
    #[test]
    fn group_axioms((gi, u, v, w) in words()) {
        let g = &catalog()[gi];
        let k = g.generators().len();
        let pick = |word: &[usize]| g.evaluate_word(&word.iter().map(|i| i % k).collect::<Vec<_>>());
        let (x, y, z) = (pick(&u), pick(&v), pick(&w));
        let xy_z = g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap();
        let x_yz = g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(xy_z, x_yz);
        prop_assert!(g.is_identity(&g.multiply(&x, &g.inverse(&x)).unwrap()));
        prop_assert_eq!(g.multiply(&g.identity(), &x).unwrap(), x.clone());
    }

    #[test]
    fn word_metric_axioms((gi, u, v, w) in words()) {
        let g = &catalog()[gi];
        let k = g.generators().len();
        let pick = |word: &[usize]| g.evaluate_word(&word.iter().map(|i| i % k).collect::<Vec<_>>());
        let (x, y, z) = (pick(&u), pick(&v), pick(&w));
        let d = |a: &GroupElement, b: &GroupElement| g.distance(a, b).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &x), 0);
        // left invariance
        let zx = g.multiply(&z, &x).unwrap();
        let zy = g.multiply(&z, &y).unwrap();
        prop_assert_eq!(d(&zx, &zy), d(&x, &y));
        // a word is an upper bound for the length it evaluates to
        prop_assert!(g.word_length(&x).unwrap() as usize <= u.len());
    }

    #[test]
    fn free_words_reduce(word in prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..16)) {
        let f2 = Group::new(GroupSpec::Free(2)).unwrap();
        let idx: Vec<usize> = word.iter().map(|&s| f2.generators().iter().position(|g| *g == GroupElement::Free(vec![s])).unwrap()).collect();
        let r = reduce(&word);
        prop_assert_eq!(f2.word_length(&f2.evaluate_word(&idx)).unwrap() as usize, r.len());
        prop_assert_eq!(f2.evaluate_word(&idx), GroupElement::Free(r));
    }

    #[test]
    fn lattice_length_is_l1(v in prop::collection::vec(-20i64..20, 3)) {
        let z3 = Group::new(GroupSpec::IntLattice(3)).unwrap();
        let l1: i64 = v.iter().map(|x| x.abs()).sum();
        prop_assert_eq!(z3.word_length(&GroupElement::Lattice(v)).unwrap() as i64, l1);
    }

    #[test]
    fn finite_abelian_closed_form_matches_bfs(a in 0u64..8, b in 0u64..8) {
        let g = Group::new(GroupSpec::FiniteAbelian(vec![8, 8])).unwrap();
        let x = GroupElement::Abelian(vec![a, b]);
        prop_assert_eq!(g.word_length(&x).unwrap(), g.bfs_word_length(&x).unwrap());
    }
}
