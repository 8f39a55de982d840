use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sandwich, section_images, verify_condition2, FibredCce, OverlapFailure, PairViolation};
use crate::error::Result;
use crate::groups::GroupElement;
use crate::hilbert::{local_subsets, AffineIsometry};

#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Quotients with at most this many elements are swept exhaustively.
    pub exhaustive_limit: u64,
    /// Number of random subsets drawn in larger or infinite quotients.
    pub samples: usize,
    /// Random subsets are grown around centres drawn from this ball.
    pub sample_radius: u32,
    /// Overlapping pairs additionally checked with the literal verifier.
    pub literal_pairs: usize,
    pub subset_cap: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            exhaustive_limit: 64,
            samples: 400,
            sample_radius: 6,
            literal_pairs: 500,
            subset_cap: 500_000,
            seed: 0,
        }
    }
}

const KEEP: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub level: u32,
    pub r: u32,
    pub exhaustive: bool,
    pub subsets: usize,
    pub condition1_pairs: usize,
    pub condition1_failure_count: usize,
    pub condition1_failures: Vec<PairViolation>,
    pub misplaced_sections: usize,
    /// Ordered pairs `(x, y)` whose transition maps were compared.
    pub transition_keys: usize,
    pub transitions_compared: usize,
    pub condition2_failure_count: usize,
    pub condition2_failures: Vec<OverlapFailure>,
    pub literal_pairs_checked: usize,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.condition1_failure_count == 0 && self.condition2_failure_count == 0 && self.misplaced_sections == 0
    }
}

/// Diameter-`< r` subsets of one component: all of them when the quotient
/// is small, otherwise a seeded sample. The flag reports exhaustiveness.
pub fn in_scope_subsets(
    emb: &FibredCce,
    level: u32,
    r: u32,
    opts: &SweepOptions,
) -> Result<(Vec<Vec<GroupElement>>, bool)> {
    emb.check_scope(level, r)?;
    let q = emb.family.component(level)?;
    if let Some(order) = q.group.order() {
        if order <= opts.exhaustive_limit {
            let points = q.group.elements()?;
            return Ok((local_subsets(&q.group, &points, r, opts.subset_cap)?, true));
        }
    }
    let centres = q.group.ball(opts.sample_radius)?;
    let window = q.group.ball(r.saturating_sub(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((level as u64) << 32) ^ r as u64);
    let mut seen: BTreeSet<Vec<GroupElement>> = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..opts.samples {
        let c = centres.choose(&mut rng).expect("balls contain the identity");
        let mut near: Vec<GroupElement> = window.iter().map(|u| q.group.mul(c, u)).collect();
        near.shuffle(&mut rng);
        let target = rng.gen_range(1..=near.len().min(6));
        let mut subset = vec![c.clone()];
        for p in near {
            if subset.len() >= target {
                break;
            }
            if subset.contains(&p) {
                continue;
            }
            let mut ok = true;
            for s in &subset {
                if q.distance(s, &p)? >= r {
                    ok = false;
                    break;
                }
            }
            if ok {
                subset.push(p);
            }
        }
        subset.sort();
        if seen.insert(subset.clone()) {
            out.push(subset);
        }
    }
    Ok((out, false))
}

/// Both conditions over the in-scope subsets of one component.
///
/// Condition 2 over every overlapping pair is equivalent to asking that the
/// transition `t_C(y)^-1 ∘ t_C(x)` not depend on `C ∋ x, y`. Transitions are
/// grouped by `(x, y)`; any disagreement is re-examined with the literal
/// verifier, which decides and supplies the witness. A seeded sample of
/// overlapping pairs is also run through the literal verifier directly.
pub fn verify_level(emb: &FibredCce, level: u32, r: u32, opts: &SweepOptions) -> Result<SweepReport> {
    let (subsets, exhaustive) = in_scope_subsets(emb, level, r, opts)?;
    let mut report = SweepReport {
        level,
        r,
        exhaustive,
        subsets: subsets.len(),
        condition1_pairs: 0,
        condition1_failure_count: 0,
        condition1_failures: Vec::new(),
        misplaced_sections: 0,
        transition_keys: 0,
        transitions_compared: 0,
        condition2_failure_count: 0,
        condition2_failures: Vec::new(),
        literal_pairs_checked: 0,
    };
    let mut first: HashMap<(GroupElement, GroupElement), (AffineIsometry, usize)> = HashMap::new();
    let mut flagged: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (idx, c) in subsets.iter().enumerate() {
        let (images, charts, misplaced) = section_images(emb, level, c)?;
        report.misplaced_sections += misplaced.len();
        let c1 = sandwich(emb, level, r, c, &images, misplaced)?;
        report.condition1_pairs += c.len() * (c.len() - 1) / 2;
        report.condition1_failure_count += c1.violations.len();
        for v in c1.violations {
            if report.condition1_failures.len() < KEEP {
                report.condition1_failures.push(v);
            }
        }
        let inverses: Vec<AffineIsometry> = charts.iter().map(|t| t.inverse()).collect();
        for i in 0..c.len() {
            for j in 0..c.len() {
                if i == j {
                    continue;
                }
                let t = inverses[j].compose(&charts[i]);
                match first.entry((c[i].clone(), c[j].clone())) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert((t, idx));
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        report.transitions_compared += 1;
                        if e.get().0 != t {
                            flagged.insert((e.get().1, idx));
                        }
                    }
                }
            }
        }
    }
    report.transition_keys = first.len();
    for (a, b) in flagged {
        if let Err(f) = verify_condition2(emb, level, r, &subsets[a], &subsets[b])? {
            report.condition2_failure_count += 1;
            if report.condition2_failures.len() < KEEP {
                report.condition2_failures.push(f);
            }
        }
    }

    let mut containing: HashMap<&GroupElement, Vec<usize>> = HashMap::new();
    for (idx, c) in subsets.iter().enumerate() {
        for x in c {
            containing.entry(x).or_default().push(idx);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x5eed) ^ level as u64);
    for _ in 0..opts.literal_pairs.min(subsets.len() * subsets.len()) {
        let a = rng.gen_range(0..subsets.len());
        let x = subsets[a].choose(&mut rng).expect("subsets are nonempty");
        let b = *containing[x].choose(&mut rng).expect("x lies in its own subset");
        report.literal_pairs_checked += 1;
        if let Err(f) = verify_condition2(emb, level, r, &subsets[a], &subsets[b])? {
            report.condition2_failure_count += 1;
            if report.condition2_failures.len() < KEEP {
                report.condition2_failures.push(f);
            }
        }
    }
    Ok(report)
}
