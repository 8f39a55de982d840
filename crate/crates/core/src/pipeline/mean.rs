use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{Group, GroupElement, GroupSpec};
use crate::Rational;

/// Stand-in for the invariant mean on a quotient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanProvider {
    /// Exact average over a finite quotient.
    FiniteUniform,
    /// Average over the box `F_N`: `|x|,|y| ≤ N, |z| ≤ N²` in Heisenberg
    /// coordinates, the cube `[-N, N]^d` in a lattice.
    Foelner { n: u32 },
}

impl fmt::Display for MeanProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanProvider::FiniteUniform => write!(f, "uniform"),
            MeanProvider::Foelner { n } => write!(f, "foelner:{n}"),
        }
    }
}

impl FromStr for MeanProvider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "uniform" {
            return Ok(MeanProvider::FiniteUniform);
        }
        if let Some(n) = s.strip_prefix("foelner:").or_else(|| s.strip_prefix("folner:")) {
            let n = n.parse().map_err(|_| Error::Parse(format!("invalid box size in `{s}`")))?;
            return Ok(MeanProvider::Foelner { n });
        }
        Err(Error::Parse(format!("unknown mean `{s}`, expected uniform or foelner:N")))
    }
}

/// An averaging set, enumerated once in a fixed order.
#[derive(Clone, Debug)]
pub struct MeanSet {
    pub provider: MeanProvider,
    pub group: Group,
    pub points: Vec<GroupElement>,
}

impl MeanProvider {
    pub fn prepare(&self, q: &Group) -> Result<MeanSet> {
        let points = match self {
            MeanProvider::FiniteUniform => {
                if !q.is_finite() {
                    return Err(Error::Precondition(format!(
                        "uniform averaging needs a finite quotient, got {}",
                        q.spec()
                    )));
                }
                q.elements()?
            }
            MeanProvider::Foelner { n } => foelner_box(q, *n)?,
        };
        Ok(MeanSet { provider: *self, group: q.clone(), points })
    }

    /// Right-translation defect `|F Δ Fg| / |F|`; zero for uniform averaging.
    pub fn defect(&self, q: &Group, g: &GroupElement) -> Result<Rational> {
        match self {
            MeanProvider::FiniteUniform => Ok(Rational::zero()),
            MeanProvider::Foelner { n } => foelner_defect(q, *n, g),
        }
    }
}

pub fn foelner_box(q: &Group, n: u32) -> Result<Vec<GroupElement>> {
    let n = n as i64;
    match q.spec() {
        GroupSpec::Heisenberg => {
            let mut out = Vec::new();
            for x in -n..=n {
                for y in -n..=n {
                    for z in -n * n..=n * n {
                        out.push(GroupElement::Heisenberg([x, y, z]));
                    }
                }
            }
            Ok(out)
        }
        GroupSpec::IntLattice(d) => {
            let mut out = vec![Vec::new()];
            for _ in 0..*d {
                out = out
                    .into_iter()
                    .flat_map(|v: Vec<i64>| {
                        (-n..=n).map(move |c| {
                            let mut w = v.clone();
                            w.push(c);
                            w
                        })
                    })
                    .collect();
            }
            Ok(out.into_iter().map(GroupElement::Lattice).collect())
        }
        other => Err(Error::Precondition(format!("no Følner boxes shipped for {other}"))),
    }
}

/// `δ(N, g) = |F Δ Fg| / |F| = 2(|F| - |F ∩ Fg|) / |F|`, counted row by row.
pub fn foelner_defect(q: &Group, n: u32, g: &GroupElement) -> Result<Rational> {
    let n = n as i64;
    let side = |shift: i64| (2 * n + 1 - shift.abs()).max(0);
    let (size, overlap) = match (q.spec(), g) {
        (GroupSpec::Heisenberg, GroupElement::Heisenberg([a, b, c])) => {
            let height = 2 * n * n + 1;
            let rows_y = side(*b);
            let mut overlap = 0i64;
            for x in -n..=n {
                if (x + a).abs() > n {
                    continue;
                }
                // (x,y,z)(a,b,c) = (x+a, y+b, z+c+xb): z-range shifted by c + xb
                overlap += rows_y * (height - (c + x * b).abs()).max(0);
            }
            ((2 * n + 1) * (2 * n + 1) * height, overlap)
        }
        (GroupSpec::IntLattice(d), GroupElement::Lattice(v)) => {
            let size = (2 * n + 1).pow(*d as u32);
            (size, v.iter().map(|&c| side(c)).product())
        }
        (spec, _) => {
            return Err(Error::Precondition(format!("no Følner defect for {g} in {spec}")));
        }
    };
    Ok(Rational::new(2 * (size - overlap), size))
}
