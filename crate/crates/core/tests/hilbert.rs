use proptest::prelude::*;
use rabox::groups::{Group, GroupElement, GroupSpec};
use rabox::hilbert::{
    cnd_check, cnd_function_check, local_subsets, properness_profile, AffineIsometry, BasisKey, CndOptions, Cocycle,
    CocycleKind, FunctionTable, HilbertVec, Locality,
};
use rabox::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn cocycles() -> Vec<Cocycle> {
    vec![
        Cocycle::new(Group::new(GroupSpec::IntLattice(2)).unwrap(), CocycleKind::LatticeTranslation).unwrap(),
        Cocycle::new(Group::new(GroupSpec::Free(2)).unwrap(), CocycleKind::FreeWall).unwrap(),
        Cocycle::new(Group::new(GroupSpec::FiniteAbelian(vec![4, 2])).unwrap(), CocycleKind::Regular).unwrap(),
    ]
}

/// Vectors on which two affine maps are compared: the origin, the unit
/// vectors of every key either map touches, and their translation parts.
fn probes(a: &AffineIsometry, b: &AffineIsometry) -> Vec<HilbertVec> {
    let mut out = vec![HilbertVec::zero(), a.translation.clone(), b.translation.clone()];
    for k in a.touched_keys().into_iter().chain(b.touched_keys()) {
        out.push(HilbertVec::unit(k));
    }
    out
}

fn same_map(a: &AffineIsometry, b: &AffineIsometry) -> bool {
    probes(a, b).iter().all(|v| a.apply(v) == b.apply(v))
}

#[test]
fn cocycle_identity_on_ball_four() {
    for c in &cocycles()[..2] {
        let g = c.group();
        let ball = g.ball(4).unwrap();
        for x in &ball {
            let bx = c.translation(x).unwrap();
            let lx = c.linear(x).unwrap();
            for y in &ball {
                let xy = g.multiply(x, y).unwrap();
                let lhs = c.translation(&xy).unwrap();
                let rhs = bx.add(&lx.apply(&c.translation(y).unwrap()));
                assert_eq!(lhs, rhs, "{x} {y}");
            }
        }
    }
}

#[test]
fn action_is_a_homomorphism() {
    for c in cocycles() {
        let g = c.group();
        let ball = g.ball(3).unwrap();
        for x in &ball {
            for y in ball.iter().step_by(3) {
                let lhs = c.action(&g.multiply(x, y).unwrap()).unwrap();
                let rhs = c.action(x).unwrap().compose(&c.action(y).unwrap());
                assert!(same_map(&lhs, &rhs), "{x} {y}");
            }
        }
    }
}

#[test]
fn free_wall_norm_is_word_length() {
    let c = &cocycles()[1];
    for g in c.group().ball(8).unwrap() {
        let GroupElement::Free(w) = &g else { unreachable!() };
        assert_eq!(c.norm_sq(&g).unwrap(), int(w.len() as i64));
    }
}

#[test]
fn lattice_norm_is_euclidean() {
    let c = &cocycles()[0];
    for g in c.group().ball(6).unwrap() {
        let GroupElement::Lattice(v) = &g else { unreachable!() };
        assert_eq!(c.norm_sq(&g).unwrap(), int(v.iter().map(|x| x * x).sum()));
    }
}

#[test]
fn regular_cocycle_is_bounded() {
    let c = &cocycles()[2];
    for g in c.group().elements().unwrap() {
        let expect = if c.group().is_identity(&g) { 0 } else { 2 };
        assert_eq!(c.norm_sq(&g).unwrap(), int(expect));
    }
}

#[test]
fn properness_profiles() {
    let p = properness_profile(&cocycles()[0], 6).unwrap();
    // in Z^2, min ‖g‖² over l(g) ≥ t is ⌈t²/2⌉, reached near the diagonal
    for t in 0..=6i64 {
        assert_eq!(p.rho1.squares()[t as usize], int((t * t + 1) / 2), "t = {t}");
        assert_eq!(p.rho2.squares()[t as usize], int(t * t));
    }
    let q = properness_profile(&cocycles()[1], 5).unwrap();
    for t in 0..=5 {
        assert_eq!(q.rho1.squares()[t], int(t as i64));
        assert_eq!(q.rho2.squares()[t], int(t as i64));
    }
}

fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Exact verdict: compress with the basis `e_i - e_last` and require every
/// principal minor of the negated compression to be nonnegative.
fn cnd_oracle(k: &[Vec<i64>]) -> bool {
    let n = k.len();
    let m = n - 1;
    let b: Vec<Vec<i128>> =
        (0..m).map(|i| (0..m).map(|j| -((k[i][j] - k[i][m] - k[m][j] + k[m][m]) as i128)).collect()).collect();
    (1u32..(1 << m)).all(|mask| {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let sub = idx.iter().map(|&i| idx.iter().map(|&j| b[i][j]).collect()).collect();
        bareiss_det(sub) >= 0
    })
}

fn to_rational(k: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    k.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
}

#[test]
fn line_distance_fixtures() {
    let pts = [0i64, 1, 3, 7, 12];
    let d: Vec<Vec<i64>> = pts.iter().map(|a| pts.iter().map(|b| (a - b).abs()).collect()).collect();
    let neg: Vec<Vec<i64>> = d.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let opts = CndOptions::default();
    assert!(cnd_oracle(&d));
    assert!(!cnd_oracle(&neg));
    let v = cnd_check(&to_rational(&d), &opts).unwrap();
    assert!(v.is_cnd && v.sampling_agrees);
    let v = cnd_check(&to_rational(&neg), &opts).unwrap();
    assert!(!v.is_cnd && v.sampling_agrees);
    assert!(v.max_eigenvalue > 0.0);
}

#[test]
fn random_kernels_agree_with_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..40 {
        let k: Vec<Vec<i64>> = if trial % 2 == 0 {
            // squared Euclidean distances are CND
            let pts: Vec<[i64; 3]> =
                (0..5).map(|_| [rng.gen_range(-4..5), rng.gen_range(-4..5), rng.gen_range(-4..5)]).collect();
            pts.iter().map(|a| pts.iter().map(|b| (0..3).map(|i| (a[i] - b[i]).pow(2)).sum()).collect()).collect()
        } else {
            let mut k = vec![vec![0i64; 5]; 5];
            for i in 0..5 {
                for j in i + 1..5 {
                    k[i][j] = rng.gen_range(0..10);
                    k[j][i] = k[i][j];
                }
            }
            k
        };
        let v =
            cnd_check(&to_rational(&k), &CndOptions { samples: 2000, seed: trial, ..CndOptions::default() }).unwrap();
        assert_eq!(v.is_cnd, cnd_oracle(&k), "trial {trial}: {k:?}");
    }
}

#[test]
fn word_length_is_cnd_on_free_group() {
    // l is conditionally negative definite on free groups
    let f2 = Group::new(GroupSpec::Free(2)).unwrap();
    let mut table = FunctionTable::default();
    for g in f2.ball(4).unwrap() {
        table.values.insert(g.clone(), int(f2.word_length(&g).unwrap() as i64));
    }
    let pts = f2.ball(1).unwrap();
    let subsets = local_subsets(&f2, &pts, 3, 10_000).unwrap();
    let rep = cnd_function_check(
        &f2,
        &table,
        Locality::Local(3),
        &subsets,
        &CndOptions { samples: 200, ..CndOptions::default() },
    )
    .unwrap();
    assert!(rep.all_cnd);
    assert!(rep.subsets_checked > 10);
}

#[test]
fn asymmetric_function_is_rejected() {
    let z = Group::new(GroupSpec::IntLattice(1)).unwrap();
    let mut t = FunctionTable { outside: Some(int(0)), ..FunctionTable::default() };
    t.values.insert(GroupElement::Lattice(vec![1]), int(1));
    assert!(cnd_function_check(&z, &t, Locality::Global, &[], &CndOptions::default()).is_err());
}

fn vec_strategy() -> impl Strategy<Value = HilbertVec> {
    prop::collection::vec((0usize..6, -5i64..6), 0..6).prop_map(|entries| {
        HilbertVec::from_entries(entries.into_iter().map(|(i, v)| {
            let key = match i {
                0 | 1 => BasisKey::Coord(i as u32),
                2 => BasisKey::Edge { from: vec![], gen: 1 },
                3 => BasisKey::Edge { from: vec![1], gen: 2 },
                4 => BasisKey::Edge { from: vec![-2], gen: -1 },
                _ => BasisKey::Edge { from: vec![2, 1], gen: 1 },
            };
            (key, int(v))
        }))
    })
}

fn f2_word() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 0..8)
}

proptest! {
    #[test]
    fn affine_actions_are_isometries(w in f2_word(), u in vec_strategy(), v in vec_strategy()) {
        let c = &cocycles()[1];
        let g = c.group().evaluate_word(&w);
        let a = c.action(&g).unwrap();
        prop_assert_eq!(a.apply(&u).sub(&a.apply(&v)).norm_sq(), u.sub(&v).norm_sq());
        let back = a.inverse().apply(&a.apply(&u));
        prop_assert_eq!(back, u);
    }

    #[test]
    fn cocycle_identity_random(w1 in f2_word(), w2 in f2_word()) {
        let c = &cocycles()[1];
        let g = c.group();
        let (x, y) = (g.evaluate_word(&w1), g.evaluate_word(&w2));
        let lhs = c.translation(&g.multiply(&x, &y).unwrap()).unwrap();
        let rhs = c.translation(&x).unwrap().add(&c.linear(&x).unwrap().apply(&c.translation(&y).unwrap()));
        prop_assert_eq!(lhs, rhs);
        // ‖b(x^-1 y)‖² = ‖α(x)0 - α(y)0‖²
        let d = c.translation(&x).unwrap().sub(&c.translation(&y).unwrap()).norm_sq();
        prop_assert_eq!(d, c.norm_sq(&g.multiply(&g.inverse(&x), &y).unwrap()).unwrap());
    }

    #[test]
    fn vector_algebra(u in vec_strategy(), v in vec_strategy()) {
        prop_assert_eq!(u.add(&v).sub(&v), u.clone());
        prop_assert!(u.add(&u.neg()).is_zero());
        prop_assert_eq!(u.dot(&v), v.dot(&u));
        let two = int(2);
        prop_assert_eq!(u.add(&v).norm_sq() + u.sub(&v).norm_sq(), two * (u.norm_sq() + v.norm_sq()));
    }
}
