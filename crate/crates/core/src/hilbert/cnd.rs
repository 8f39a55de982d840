use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_integer::Integer;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{Group, GroupElement};
use crate::rational::to_f64;
use crate::Rational;

#[derive(Clone, Debug, PartialEq)]
pub struct CndOptions {
    /// Eigenvalues within `tol` of zero are settled by sampling.
    pub tol: f64,
    /// Number of random mean-zero coefficient vectors.
    pub samples: usize,
    pub seed: u64,
    /// Coefficients are drawn from `-coeff_range..=coeff_range`.
    pub coeff_range: i64,
}

impl Default for CndOptions {
    fn default() -> Self {
        CndOptions { tol: 1e-9, samples: 10_000, seed: 0, coeff_range: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decider {
    Trivial,
    Eigenvalue,
    Sampling,
}

#[derive(Clone, Debug, Serialize)]
pub struct CndVerdict {
    pub is_cnd: bool,
    /// Largest eigenvalue of the kernel compressed to mean-zero vectors.
    pub max_eigenvalue: f64,
    /// Largest sampled value of `Σ λ_i λ_j k_ij`, exact.
    #[serde(with = "crate::rational::single")]
    pub sampled_max_form: Rational,
    pub samples: usize,
    /// Sampling found no positive form exactly when the eigenvalue test
    /// says negative semidefinite.
    pub sampling_agrees: bool,
    pub decided_by: Decider,
}

/// Orthonormal basis of the mean-zero hyperplane (Helmert contrasts), as
/// the columns of an `m × (m-1)` matrix.
fn helmert(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m - 1, |i, j| {
        let k = (j + 1) as f64;
        let scale = 1.0 / (k * (k + 1.0)).sqrt();
        if i <= j {
            scale
        } else if i == j + 1 {
            -k * scale
        } else {
            0.0
        }
    })
}

fn validate(kernel: &[Vec<Rational>]) -> Result<usize> {
    let m = kernel.len();
    for (i, row) in kernel.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Input(format!("kernel row {i} has {} entries, expected {m}", row.len())));
        }
        if !row[i].is_zero() {
            return Err(Error::Input(format!("kernel diagonal entry {i} is nonzero")));
        }
        for (j, x) in row.iter().enumerate().take(i) {
            if *x != kernel[j][i] {
                return Err(Error::Input(format!("kernel is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(m)
}

/// Largest eigenvalue of `P K P` on the mean-zero subspace, `P = I - J/m`.
pub fn max_mean_zero_eigenvalue(kernel: &[Vec<Rational>]) -> Result<f64> {
    let m = validate(kernel)?;
    if m < 2 {
        return Ok(0.0);
    }
    let k = DMatrix::from_fn(m, m, |i, j| to_f64(&kernel[i][j]));
    let q = helmert(m);
    let compressed = q.transpose() * k * q;
    let eig = SymmetricEigen::new(compressed);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Exact sampled maximum of mean-zero quadratic forms. The kernel is
/// cleared to a common denominator so each form is an `i128` sum.
fn sampled_max_form(kernel: &[Vec<Rational>], opts: &CndOptions) -> Result<Rational> {
    let m = kernel.len();
    let mut denom: i64 = 1;
    for row in kernel {
        for x in row {
            denom = denom.lcm(x.denom());
        }
    }
    let ints: Vec<Vec<i128>> = kernel
        .iter()
        .map(|row| row.iter().map(|x| (*x.numer() as i128) * (denom / x.denom()) as i128).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<i128> = None;
    let mut lambda = vec![0i128; m];
    for _ in 0..opts.samples {
        let mut sum = 0i128;
        for l in lambda.iter_mut().take(m - 1) {
            *l = rng.gen_range(-opts.coeff_range..=opts.coeff_range) as i128;
            sum += *l;
        }
        lambda[m - 1] = -sum;
        let mut form = 0i128;
        for i in 0..m {
            if lambda[i] == 0 {
                continue;
            }
            let mut row = 0i128;
            for j in 0..m {
                row += ints[i][j] * lambda[j];
            }
            form += lambda[i] * row;
        }
        best = Some(best.map_or(form, |b| b.max(form)));
    }
    let best = best.unwrap_or(0);
    let best = i64::try_from(best).map_err(|_| Error::Input("sampled form overflows i64".into()))?;
    Ok(Rational::new(best, denom))
}

/// Decides conditional negative definiteness of a symmetric zero-diagonal
/// kernel. The eigenvalue test decides unless its extremal eigenvalue is
/// within `tol` of zero, in which case exact sampling decides.
pub fn cnd_check(kernel: &[Vec<Rational>], opts: &CndOptions) -> Result<CndVerdict> {
    let m = validate(kernel)?;
    if m < 2 {
        return Ok(CndVerdict {
            is_cnd: true,
            max_eigenvalue: 0.0,
            sampled_max_form: Rational::zero(),
            samples: 0,
            sampling_agrees: true,
            decided_by: Decider::Trivial,
        });
    }
    let max_eigenvalue = max_mean_zero_eigenvalue(kernel)?;
    let sampled = sampled_max_form(kernel, opts)?;
    let sampled_positive = sampled > Rational::zero();
    let (is_cnd, decided_by) = if max_eigenvalue.abs() < opts.tol {
        (!sampled_positive, Decider::Sampling)
    } else {
        (max_eigenvalue < 0.0, Decider::Eigenvalue)
    };
    // sampling can miss a thin positive cone, so only a positive sample
    // under an eigenvalue NSD verdict counts as disagreement
    let sampling_agrees = !(sampled_positive && max_eigenvalue < opts.tol);
    Ok(CndVerdict {
        is_cnd,
        max_eigenvalue,
        sampled_max_form: sampled,
        samples: opts.samples,
        sampling_agrees,
        decided_by,
    })
}

/// A function on group elements given by a finite table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FunctionTable {
    pub values: BTreeMap<GroupElement, Rational>,
    /// Value outside the table; `None` makes missing entries a scope error.
    pub outside: Option<Rational>,
}

impl FunctionTable {
    pub fn get(&self, g: &GroupElement) -> Result<Rational> {
        match (self.values.get(g), self.outside) {
            (Some(v), _) => Ok(*v),
            (None, Some(v)) => Ok(v),
            (None, None) => Err(Error::Scope(format!("no table entry for {g}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locality {
    Global,
    /// Only subsets of diameter `< r`.
    Local(u32),
}

#[derive(Clone, Debug, Serialize)]
pub struct CndFunctionReport {
    pub locality: Locality,
    pub subsets_checked: usize,
    pub all_cnd: bool,
    pub worst_eigenvalue: f64,
    pub sampling_disagreements: usize,
    pub first_failure: Option<Vec<String>>,
}

/// Checks `k(g, h) = ψ(g^-1 h)` on each subset after asserting `ψ(g^-1) = ψ(g)`.
pub fn cnd_function_check(
    group: &Group,
    psi: &FunctionTable,
    locality: Locality,
    subsets: &[Vec<GroupElement>],
    opts: &CndOptions,
) -> Result<CndFunctionReport> {
    for (g, v) in &psi.values {
        let inv = psi.get(&group.inverse(g))?;
        if inv != *v {
            return Err(Error::Input(format!("ψ is not symmetric at {g}: {v} vs {inv}")));
        }
    }
    let mut report = CndFunctionReport {
        locality,
        subsets_checked: 0,
        all_cnd: true,
        worst_eigenvalue: f64::NEG_INFINITY,
        sampling_disagreements: 0,
        first_failure: None,
    };
    for (idx, subset) in subsets.iter().enumerate() {
        if let Locality::Local(r) = locality {
            for (i, x) in subset.iter().enumerate() {
                for y in &subset[i + 1..] {
                    if group.distance(x, y)? >= r {
                        return Err(Error::Precondition(format!("subset {idx} has diameter ≥ {r}")));
                    }
                }
            }
        }
        let kernel = subset
            .iter()
            .map(|x| {
                let xi = group.inverse(x);
                subset.iter().map(|y| psi.get(&group.mul(&xi, y))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let v = cnd_check(&kernel, &CndOptions { seed: opts.seed.wrapping_add(idx as u64), ..opts.clone() })?;
        report.subsets_checked += 1;
        report.worst_eigenvalue = report.worst_eigenvalue.max(v.max_eigenvalue);
        if !v.sampling_agrees {
            report.sampling_disagreements += 1;
        }
        if !v.is_cnd && report.all_cnd {
            report.all_cnd = false;
            report.first_failure = Some(subset.iter().map(|g| g.to_string()).collect());
        }
    }
    if report.subsets_checked == 0 {
        report.worst_eigenvalue = 0.0;
    }
    Ok(report)
}

/// Every nonempty subset of `points` whose pairwise distances are `< r`,
/// in deterministic order. Fails once more than `cap` subsets are found.
pub fn local_subsets(group: &Group, points: &[GroupElement], r: u32, cap: usize) -> Result<Vec<Vec<GroupElement>>> {
    let n = points.len();
    let mut close = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let near = group.distance(&points[i], &points[j])? < r;
            close[i][j] = near;
            close[j][i] = near;
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn grow(
        start: usize,
        close: &[Vec<bool>],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> bool {
        for i in start..close.len() {
            if current.iter().all(|&j| close[i][j]) {
                current.push(i);
                out.push(current.clone());
                if out.len() > cap || !grow(i + 1, close, current, out, cap) {
                    return false;
                }
                current.pop();
            }
        }
        true
    }
    if !grow(0, &close, &mut current, &mut out, cap) {
        return Err(Error::ResourceCap { what: format!("diameter-<{r} subsets"), cap });
    }
    Ok(out.into_iter().map(|idx| idx.into_iter().map(|i| points[i].clone()).collect()).collect())
}

/// `count` random subsets of `size` distinct points.
pub fn sampled_subsets(points: &[GroupElement], size: usize, count: usize, seed: u64) -> Vec<Vec<GroupElement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = size.min(points.len());
    (0..count).map(|_| points.choose_multiple(&mut rng, size).cloned().collect()).collect()
}
