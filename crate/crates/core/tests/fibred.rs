use std::sync::Arc;

use rabox::chains::{BoxFamily, BoxPoint, BoxSpace, Chain, ChainSpec};
use rabox::fibred::{
    boxspace_to_family, family_to_boxspace, verify_condition1, verify_condition2, verify_level, BoxRegion, FibredCce,
    ReflectedOracle, SweepOptions,
};
use rabox::groups::{Group, GroupElement, GroupSpec};
use rabox::hilbert::{BasisKey, Cocycle, CocycleKind};
use rabox::manifest::{CertificateManifest, OracleSpec};
use rabox::pipeline::forward;
use rabox::{Error, Rational};

fn z_forward(max_r: u32) -> FibredCce {
    let z = Group::new(GroupSpec::IntLattice(1)).unwrap();
    let chain = Chain::new(z.clone(), ChainSpec::Pow2 { levels: 6 }).unwrap();
    forward(&chain, &Cocycle::new(z, CocycleKind::LatticeTranslation).unwrap(), max_r).unwrap()
}

fn f2_forward() -> FibredCce {
    let f2 = Group::new(GroupSpec::Free(2)).unwrap();
    let chain = Chain::new(f2.clone(), ChainSpec::Lcs { levels: 2 }).unwrap();
    forward(&chain, &Cocycle::new(f2, CocycleKind::FreeWall).unwrap(), 1).unwrap()
}

fn res(k: u64) -> GroupElement {
    GroupElement::Abelian(vec![k])
}

#[test]
fn z_exclusion_lists() {
    let emb = z_forward(8);
    // level n separates radius 3r once 2^n > 3r
    for r in 1..=8u32 {
        let expect: Vec<u32> = (1..=6).filter(|&n| (1u32 << n) <= 3 * r).collect();
        assert_eq!(emb.excluded(r).unwrap(), expect.as_slice(), "r = {r}");
    }
    assert!(emb.structure(Rational::from_integer(4)).passed());
}

#[test]
fn scope_is_enforced() {
    let emb = z_forward(4);
    assert!(matches!(verify_condition1(&emb, 2, 4, &[res(0)]), Err(Error::Scope(_))));
    assert!(matches!(verify_condition1(&emb, 5, 5, &[res(0)]), Err(Error::Scope(_))));
    assert!(matches!(verify_condition1(&emb, 4, 2, &[res(0), res(5)]), Err(Error::Precondition(_))));
}

#[test]
fn reflected_trivialization_breaks_overlap_condition() {
    let emb = z_forward(4);
    let c_star = vec![res(0), res(1)];
    let oracle = ReflectedOracle::new(emb.oracle.clone(), 4, c_star.clone(), res(0), BasisKey::Coord(0));
    let bad = FibredCce { oracle: Arc::new(oracle), ..emb.clone() };

    let wider = vec![res(0), res(1), res(2)];
    assert!(verify_condition2(&emb, 4, 4, &c_star, &wider).unwrap().is_ok());
    let failure = verify_condition2(&bad, 4, 4, &c_star, &wider).unwrap().unwrap_err();
    assert_eq!(failure.level, 4);
    assert!(failure.residual_sq > Rational::from_integer(0));

    let sweep = verify_level(&bad, 4, 4, &SweepOptions::default()).unwrap();
    assert!(!sweep.passed());
    assert!(sweep.condition2_failure_count > 0);
    // untouched levels are unaffected
    assert!(verify_level(&bad, 5, 4, &SweepOptions::default()).unwrap().passed());
}

#[test]
fn lowered_rho2_is_caught_with_witness() {
    let mut emb = z_forward(4);
    emb.rho2 = emb.rho2.scaled(Rational::new(1, 2));
    let rep = verify_condition1(&emb, 4, 4, &[res(0), res(3)]).unwrap();
    assert!(!rep.passed());
    let v = &rep.violations[0];
    assert_eq!(v.bound, "rho2");
    assert_eq!(v.distance, 3);
    assert_eq!(v.attained_sq, Rational::from_integer(9));
}

#[test]
fn f2_free_wall_at_radius_one() {
    let emb = f2_forward();
    assert_eq!(emb.admissible_levels(1).unwrap(), vec![1, 2]);
    for n in [1, 2] {
        let rep = verify_level(&emb, n, 1, &SweepOptions { samples: 100, ..SweepOptions::default() }).unwrap();
        assert!(rep.passed());
        assert!(!rep.exhaustive);
    }
}

#[test]
fn f2_forward_is_out_of_scope_past_radius_one() {
    let f2 = Group::new(GroupSpec::Free(2)).unwrap();
    let chain = Chain::new(f2.clone(), ChainSpec::Lcs { levels: 2 }).unwrap();
    let c = Cocycle::new(f2, CocycleKind::FreeWall).unwrap();
    assert!(matches!(forward(&chain, &c, 3), Err(Error::Scope(_))));
}

#[test]
fn box_space_round_trip_preserves_verdicts() {
    let emb = z_forward(8);
    let space = BoxSpace::new(emb.family.clone());
    let boxed = family_to_boxspace(&emb, space).unwrap();
    for r in 1..=8 {
        assert!(boxed.k_r(r).unwrap().is_bounded(&boxed.space).unwrap());
    }
    let back = boxspace_to_family(&boxed).unwrap();
    assert_eq!(back.exclusion, emb.exclusion);
    let opts = SweepOptions::default();
    for r in [2, 5, 8] {
        for n in emb.admissible_levels(r).unwrap() {
            assert_eq!(
                verify_level(&emb, n, r, &opts).unwrap().passed(),
                verify_level(&back, n, r, &opts).unwrap().passed()
            );
        }
    }
    // box-space verifiers agree on a subset outside K_r
    let c: Vec<BoxPoint> = [0, 1, 2].iter().map(|&k| BoxPoint::new(5, res(k))).collect();
    assert!(boxed.verify_condition1(4, &c).unwrap().passed());
    assert!(boxed.verify_condition2(4, &c[..2], &c[1..]).unwrap().is_ok());
    assert!(matches!(boxed.verify_condition1(4, &[BoxPoint::new(1, res(0))]), Err(Error::Scope(_))));
}

#[test]
fn box_region_components() {
    let emb = z_forward(2);
    let space = BoxSpace::new(emb.family.clone());
    let ball = BoxRegion::Ball { center: BoxPoint::new(2, res(1)), radius: 6 };
    // l_2([1]) + 2 + m ≤ 6 reaches components 1 and 3
    assert_eq!(ball.components_met(&space).unwrap(), vec![1, 2, 3]);
    assert!(ball.is_bounded(&space).unwrap());
}

#[test]
fn infinite_components_have_no_box_space_form() {
    let emb = f2_forward();
    let space = BoxSpace::new(BoxFamily::new(emb.family.chain().clone()));
    assert!(matches!(family_to_boxspace(&emb, space), Err(Error::UnboundedComponent { level: 1 })));
}

#[test]
fn manifest_round_trip() {
    let emb = z_forward(6);
    let m = CertificateManifest::describe(&emb, OracleSpec::Cocycle { cocycle: CocycleKind::LatticeTranslation });
    let text = m.to_json().unwrap();
    let parsed = CertificateManifest::from_json(&text).unwrap();
    assert_eq!(parsed, m);
    let rebuilt = parsed.build(None).unwrap();
    assert_eq!(rebuilt.exclusion, emb.exclusion);
    assert_eq!(rebuilt.rho2, emb.rho2);
    assert!(verify_level(&rebuilt, 5, 6, &SweepOptions::default()).unwrap().passed());

    let mut tampered = parsed.clone();
    tampered.rho2_sq = tampered.rho2_sq.scaled(Rational::new(1, 3));
    let bad = tampered.build(None).unwrap();
    assert!(!verify_level(&bad, 5, 6, &SweepOptions::default()).unwrap().passed());

    let mut wrong_schema = parsed;
    wrong_schema.schema_version = 99;
    assert!(CertificateManifest::from_json(&wrong_schema.to_json().unwrap()).is_err());
}
