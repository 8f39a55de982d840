//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rabox::chains::{
    check_metric_axioms, exhaustive_box_triples, verify_box_metric, BoxFamily, BoxSpace, Chain, ChainSpec,
};
use rabox::coarse::{pullback_fibred, verify_coarse, CoarseMapFamily};
use rabox::fibred::{
    boxspace_to_family, family_to_boxspace, in_scope_subsets, verify_level, FibredCce, ReflectedOracle, SweepOptions,
};
use rabox::groups::{Group, GroupElement, GroupSpec};
use rabox::hilbert::{cnd_check, BasisKey, CndOptions, Cocycle, CocycleKind};
use rabox::pipeline::{
    attained_mismatches, build_psi, check_limit, forward, limit_psi, BackwardOptions, CocycleOracle, MeanProvider,
};
use rabox::{Error, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

const EIGEN_TOL: f64 = 1e-9;

fn z_chain(levels: u32) -> Chain {
    Chain::new(Group::new(GroupSpec::IntLattice(1)).unwrap(), ChainSpec::Pow2 { levels }).unwrap()
}

fn f2_chain() -> Chain {
    Chain::new(Group::new(GroupSpec::Free(2)).unwrap(), ChainSpec::Lcs { levels: 2 }).unwrap()
}

fn z_cocycle() -> Cocycle {
    Cocycle::new(Group::new(GroupSpec::IntLattice(1)).unwrap(), CocycleKind::LatticeTranslation).unwrap()
}

fn f2_cocycle() -> Cocycle {
    Cocycle::new(Group::new(GroupSpec::Free(2)).unwrap(), CocycleKind::FreeWall).unwrap()
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e(err: Error) -> String {
    err.to_string()
}

/// Exhaustive sweep of every admissible level at radius `r`.
fn sweep_all(emb: &FibredCce, r: u32, opts: &SweepOptions) -> Result<usize, String> {
    let mut subsets = 0;
    for n in emb.admissible_levels(r).map_err(e)? {
        let rep = verify_level(emb, n, r, opts).map_err(e)?;
        ensure(rep.passed(), format!("sweep failed at level {n}, r = {r}"))?;
        subsets += rep.subsets;
    }
    Ok(subsets)
}

fn quotient_length() -> Outcome {
    let mut checked = 0;
    // Z: literal form, h ranging over G_n ∩ ball(2 l(g))
    let z = z_chain(6);
    let group = z.group();
    for n in 1..=6 {
        for g in group.ball(8).map_err(e)? {
            let l = group.word_length(&g).map_err(e)?;
            let mut best = u32::MAX;
            for h in group.ball(2 * l).map_err(e)? {
                if z.contains(n, &h).map_err(e)? {
                    best = best.min(group.word_length(&group.multiply(&g, &h).map_err(e)?).map_err(e)?);
                }
            }
            ensure(z.quotient_length(n, &g).map_err(e)? == best, format!("Z level {n}, {g}"))?;
            checked += 1;
        }
    }
    // F_2 mod γ_2: gh = x ranges over the coset of g inside ball(l(g))
    let f2 = f2_chain();
    let group = f2.group();
    let ball = group.ball(8).map_err(e)?;
    let mut best: HashMap<GroupElement, u32> = HashMap::new();
    for x in &ball {
        let l = group.word_length(x).map_err(e)?;
        let slot = best.entry(f2.project(1, x).map_err(e)?).or_insert(l);
        *slot = (*slot).min(l);
    }
    for g in &ball {
        let q = f2.project(1, g).map_err(e)?;
        ensure(f2.quotient_length(1, g).map_err(e)? == best[&q], format!("F2 level 1, {g}"))?;
        checked += 1;
    }
    Ok(format!("{checked} elements, exact"))
}

fn box_metric() -> Outcome {
    let space = BoxSpace::new(BoxFamily::new(z_chain(6)));
    let pts = exhaustive_box_triples(&space, 5, 4).map_err(e)?;
    let p = &pts;
    let triples =
        p.iter().flat_map(|a| p.iter().flat_map(move |b| p.iter().map(move |c| (a.clone(), b.clone(), c.clone()))));
    let exhaustive = check_metric_axioms(&space, triples).map_err(e)?;
    ensure(exhaustive.passed(), format!("{} exhaustive violations", exhaustive.violation_count))?;
    let sampled = verify_box_metric(&space, 10_000, 0, 5).map_err(e)?;
    ensure(sampled.passed(), format!("{} sampled violations on Z", sampled.violation_count))?;
    let f2 = BoxSpace::new(BoxFamily::new(f2_chain()));
    let sampled_f2 = verify_box_metric(&f2, 10_000, 1, 5).map_err(e)?;
    ensure(sampled_f2.passed(), format!("{} sampled violations on F2", sampled_f2.violation_count))?;
    Ok(format!(
        "{} exhaustive + {} random triples, 0 violations",
        exhaustive.triples_checked,
        sampled.triples_checked + sampled_f2.triples_checked
    ))
}

fn separation() -> Outcome {
    let space = BoxSpace::new(BoxFamily::new(z_chain(8)));
    let mut pairs = 0;
    for n in 1..=8 {
        for m in (1..=8).filter(|&m| m != n) {
            let s = space.component_separation(n, m).map_err(e)?;
            ensure(s == (n + m) as u64, format!("separation({n},{m}) = {s}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} ordered pairs"))
}

fn cocycle_suite() -> Outcome {
    let lattice = Cocycle::new(Group::new(GroupSpec::IntLattice(2)).unwrap(), CocycleKind::LatticeTranslation).unwrap();
    let mut pairs = 0;
    for c in [&lattice, &f2_cocycle()] {
        let g = c.group();
        let ball = g.ball(4).map_err(e)?;
        for x in &ball {
            let bx = c.translation(x).map_err(e)?;
            let lx = c.linear(x).map_err(e)?;
            for y in &ball {
                let xy = g.multiply(x, y).map_err(e)?;
                let by = c.translation(y).map_err(e)?;
                ensure(
                    c.translation(&xy).map_err(e)? == bx.add(&lx.apply(&by)),
                    format!("cocycle identity at {x}, {y}"),
                )?;
                // linear parts compose: L(xy)v = L(x)L(y)v on v = b(y)
                let lxy = c.linear(&xy).map_err(e)?;
                let ly = c.linear(y).map_err(e)?;
                ensure(lxy.apply(&by) == lx.apply(&ly.apply(&by)), format!("homomorphism at {x}, {y}"))?;
                pairs += 1;
            }
        }
    }
    let f2 = f2_cocycle();
    let ball = f2.group().ball(8).map_err(e)?;
    for g in &ball {
        let l = f2.group().word_length(g).map_err(e)?;
        ensure(f2.norm_sq(g).map_err(e)? == int(l as i64), format!("‖b({g})‖² ≠ l"))?;
    }
    Ok(format!("{pairs} pairs, {} norms", ball.len()))
}

fn forward_pipeline() -> Outcome {
    let opts = SweepOptions::default();
    let mut subsets = 0;
    let mut attained = 0;

    let z = z_chain(6);
    let emb = forward(&z, &z_cocycle(), 8).map_err(e)?;
    let oracle = CocycleOracle::new(z, z_cocycle()).map_err(e)?;
    for r in [2, 4, 8] {
        subsets += sweep_all(&emb, r, &opts)?;
        for n in emb.admissible_levels(r).map_err(e)? {
            let (cs, exhaustive) = in_scope_subsets(&emb, n, r, &opts).map_err(e)?;
            ensure(exhaustive, format!("Z level {n} not exhaustive"))?;
            for c in &cs {
                ensure(
                    attained_mismatches(&oracle, n, c).map_err(e)?.is_empty(),
                    format!("attained mismatch at level {n}"),
                )?;
                attained += 1;
            }
        }
    }

    let f2 = f2_chain();
    let emb = forward(&f2, &f2_cocycle(), 1).map_err(e)?;
    let oracle = CocycleOracle::new(f2, f2_cocycle()).map_err(e)?;
    subsets += sweep_all(&emb, 1, &opts)?;
    for n in emb.admissible_levels(1).map_err(e)? {
        for c in &in_scope_subsets(&emb, n, 1, &opts).map_err(e)?.0 {
            ensure(
                attained_mismatches(&oracle, n, c).map_err(e)?.is_empty(),
                format!("F2 attained mismatch at level {n}"),
            )?;
            attained += 1;
        }
    }
    Ok(format!("{subsets} subsets swept, {attained} attained-distance checks"))
}

fn backward_pipeline() -> Outcome {
    let z = z_chain(6);
    let emb = forward(&z, &z_cocycle(), 8).map_err(e)?;
    let opts = BackwardOptions::default();
    let mut tables = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for r in [4, 6, 8] {
        let b = build_psi(&emb, r, MeanProvider::FiniteUniform, &opts).map_err(e)?;
        ensure(b.kernel.passed(), format!("k_r mismatch at r = {r}"))?;
        ensure(b.kernel.second_choices > 0, format!("no second covering subset at r = {r}"))?;
        let cnd = b.local_cnd.as_ref().ok_or(format!("no local CND report at r = {r}"))?;
        ensure(cnd.all_cnd && cnd.worst_eigenvalue <= EIGEN_TOL, format!("local CND fails at r = {r}"))?;
        ensure(b.passed(), format!("backward checks fail at r = {r}"))?;
        worst = worst.max(cnd.worst_eigenvalue);
        tables.push(b.table);
    }
    let limit = limit_psi(&tables).map_err(e)?;
    let values = limit.stabilized_values();
    for x in -4i64..=4 {
        let g = GroupElement::Lattice(vec![x]);
        ensure(values.get(&g) == Some(&int(x * x)), format!("ψ({x}) ≠ {}", x * x))?;
    }
    let check = check_limit(&limit, z.group(), &emb.rho1, &emb.rho2, 50, &opts.cnd).map_err(e)?;
    ensure(check.envelope_violations.is_empty(), "limit envelope violated")?;
    Ok(format!("worst eigenvalue {worst:.3e}, ψ = x² on ball(4)"))
}

fn foelner_mode() -> Outcome {
    let emb = forward(&f2_chain(), &f2_cocycle(), 2).map_err(e)?;
    let opts = BackwardOptions::default();
    let mut previous: Option<HashMap<String, Rational>> = None;
    let mut maxima = Vec::new();
    for n in [2, 4, 6, 8] {
        let b = build_psi(&emb, 2, MeanProvider::Foelner { n }, &opts).map_err(e)?;
        ensure(b.table.level == 2, "not the Heisenberg quotient")?;
        let forms = b.averaged_forms.as_ref().ok_or("no averaged forms")?;
        ensure(forms.all_nonpositive, format!("averaged form positive at N = {n}"))?;
        ensure(b.symmetry.iter().all(|s| s.within), format!("symmetry defect over bound at N = {n}"))?;
        let bounds: HashMap<String, Rational> = b.symmetry.iter().map(|s| (s.element.clone(), s.bound)).collect();
        if let Some(prev) = &previous {
            for (g, bound) in &bounds {
                if let Some(p) = prev.get(g) {
                    ensure(bound <= p, format!("bound for {g} grows at N = {n}"))?;
                }
            }
        }
        maxima.push(bounds.values().copied().max().unwrap_or(int(0)));
        previous = Some(bounds);
    }
    ensure(maxima.windows(2).all(|w| w[1] < w[0]), format!("max bound not shrinking: {maxima:?}"))?;
    let shown: Vec<String> = maxima.iter().map(|m| m.to_string()).collect();
    Ok(format!("max bounds {}", shown.join(" > ")))
}

fn pullbacks() -> Outcome {
    let opts = SweepOptions::default();
    let mut out = Vec::new();

    let emb = forward(&z_chain(6), &z_cocycle(), 8).map_err(e)?;
    let identity = CoarseMapFamily::identity(emb.family.clone(), 64);
    let doubling_target = forward(&z_chain(6), &z_cocycle(), 9).map_err(e)?;
    let doubling = CoarseMapFamily::doubling(doubling_target.family.clone(), 64).map_err(e)?;
    for (name, target, fam) in [("identity", &emb, &identity), ("doubling", &doubling_target, &doubling)] {
        ensure(verify_coarse(fam, 500, 0, 8).map_err(e)?.passed(), format!("{name}: coarse verifier fails"))?;
        let pb = pullback_fibred(target, fam, 8).map_err(e)?;
        for (t, (lo, hi)) in pb.rho1.squares().iter().zip(pb.rho2.squares()).enumerate() {
            let t = t as u64;
            ensure(
                *lo == target.rho1.at_sq(fam.m.at(t).map_err(e)?).map_err(e)?,
                format!("{name}: ρ1 is not ρ1∘m at {t}"),
            )?;
            ensure(
                *hi == target.rho2.at_sq(fam.big_m.at(t).map_err(e)?).map_err(e)?,
                format!("{name}: ρ2 is not ρ2∘M at {t}"),
            )?;
        }
        for r in 1..=pb.max_r {
            sweep_all(&pb, r, &opts).map_err(|m| format!("{name}: {m}"))?;
        }
        out.push(format!("{name} max_r {}", pb.max_r));
    }
    Ok(out.join(", "))
}

fn round_trip() -> Outcome {
    let opts = SweepOptions::default();
    let good = forward(&z_chain(6), &z_cocycle(), 8).map_err(e)?;
    let res = |k: u64| GroupElement::Abelian(vec![k]);
    let reflected = ReflectedOracle::new(good.oracle.clone(), 4, vec![res(0), res(1)], res(0), BasisKey::Coord(0));
    let bad = FibredCce { oracle: Arc::new(reflected), ..good.clone() };
    let mut verdicts = 0;
    let mut failing = 0;
    for emb in [&good, &bad] {
        let boxed = family_to_boxspace(emb, BoxSpace::new(emb.family.clone())).map_err(e)?;
        let back = boxspace_to_family(&boxed).map_err(e)?;
        ensure(back.exclusion == emb.exclusion, "exclusion lists differ after round trip")?;
        for r in 1..=8 {
            for n in emb.admissible_levels(r).map_err(e)? {
                let before = verify_level(emb, n, r, &opts).map_err(e)?.passed();
                let after = verify_level(&back, n, r, &opts).map_err(e)?.passed();
                ensure(before == after, format!("verdict changed at level {n}, r = {r}"))?;
                verdicts += 1;
                failing += usize::from(!before);
            }
        }
    }
    ensure(failing > 0, "corrupted certificate produced no failing verdict")?;
    let f2 = forward(&f2_chain(), &f2_cocycle(), 1).map_err(e)?;
    match family_to_boxspace(&f2, BoxSpace::new(f2.family.clone())) {
        Err(Error::UnboundedComponent { .. }) => {}
        other => return Err(format!("F2 lcs gave {:?}", other.map(|_| ())))?,
    }
    Ok(format!("{verdicts} verdicts preserved ({failing} failing), F2 rejected"))
}

fn cnd_cross_validation() -> Outcome {
    let opts = CndOptions { samples: 10_000, tol: EIGEN_TOL, ..CndOptions::default() };
    let to_q =
        |k: &[Vec<i64>]| -> Vec<Vec<Rational>> { k.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect() };
    let pts = [0i64, 1, 3, 7, 12];
    let d: Vec<Vec<i64>> = pts.iter().map(|a| pts.iter().map(|b| (a - b).abs()).collect()).collect();
    let neg: Vec<Vec<i64>> = d.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let mut kernels = vec![d, neg];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    while kernels.len() < 50 {
        let k = if kernels.len() % 2 == 0 {
            let p: Vec<[i64; 2]> = (0..5).map(|_| [rng.gen_range(-5..6), rng.gen_range(-5..6)]).collect();
            p.iter().map(|a| p.iter().map(|b| (a[0] - b[0]).pow(2) + (a[1] - b[1]).pow(2)).collect()).collect()
        } else {
            let mut k = vec![vec![0i64; 5]; 5];
            for i in 0..5 {
                for j in i + 1..5 {
                    k[i][j] = rng.gen_range(-3..10);
                    k[j][i] = k[i][j];
                }
            }
            k
        };
        kernels.push(k);
    }
    let mut cnd = 0;
    for (i, k) in kernels.iter().enumerate() {
        let v = cnd_check(&to_q(k), &CndOptions { seed: i as u64, ..opts.clone() }).map_err(e)?;
        ensure(v.sampling_agrees, format!("kernel {i}: eigenvalue and sampling disagree"))?;
        cnd += usize::from(v.is_cnd);
    }
    let fixture = |k: &[Vec<i64>]| cnd_check(&to_q(k), &opts).map(|v| v.is_cnd).map_err(e);
    ensure(fixture(&kernels[0])? && !fixture(&kernels[1])?, "|x-y| fixtures misclassified")?;
    Ok(format!("50 kernels ({cnd} CND), 10000 samples each"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("quotient-length oracle", Duration::from_secs(30), quotient_length),
        ("box metric", Duration::from_secs(60), box_metric),
        ("component separation", Duration::from_secs(60), separation),
        ("cocycle suite", Duration::from_secs(60), cocycle_suite),
        ("forward pipeline", Duration::from_secs(300), forward_pipeline),
        ("backward pipeline", Duration::from_secs(300), backward_pipeline),
        ("Foelner mode", Duration::from_secs(300), foelner_mode),
        ("pullbacks", Duration::from_secs(60), pullbacks),
        ("box-space round trip", Duration::from_secs(300), round_trip),
        ("CND cross-validation", Duration::from_secs(30), cnd_cross_validation),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {}s", budget.as_secs())),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "{} criterion {}: {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
