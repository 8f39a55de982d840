//! Monotone control tables on integer distances.
//!
//! `Control` stores squared values `ρ(t)²` so that comparisons against
//! squared Hilbert norms stay exact. `DistanceControl` holds the integer
//! tables `m`, `M` of a coarse map family.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Control {
    #[serde(with = "crate::rational::vec")]
    squares: Vec<Rational>,
}

impl Control {
    /// Table of `ρ(t)²` for `t = 0..squares.len()`.
    pub fn from_squares(squares: Vec<Rational>) -> Result<Self> {
        if squares.is_empty() {
            return Err(Error::Config("control table is empty".into()));
        }
        if squares.iter().any(|x| *x < Rational::zero()) {
            return Err(Error::Config("control table has a negative square".into()));
        }
        Ok(Control { squares })
    }

    /// `ρ(t) = t` on `0..=max`.
    pub fn linear(max: u32) -> Self {
        Control { squares: (0..=max as i64).map(|t| Rational::from_integer(t * t)).collect() }
    }

    pub fn squares(&self) -> &[Rational] {
        &self.squares
    }

    /// Largest covered argument.
    pub fn max_arg(&self) -> u32 {
        self.squares.len() as u32 - 1
    }

    pub fn at_sq(&self, t: u64) -> Result<Rational> {
        self.squares
            .get(t as usize)
            .copied()
            .ok_or_else(|| Error::Config(format!("control evaluated at {t}, table covers 0..={}", self.max_arg())))
    }

    pub fn is_monotone(&self) -> bool {
        self.squares.windows(2).all(|w| w[0] <= w[1])
    }

    /// Unboundedness proxy: the value at the largest argument reaches the threshold.
    pub fn reaches(&self, threshold_sq: Rational) -> bool {
        self.squares[self.squares.len() - 1] >= threshold_sq
    }

    /// `t ↦ ρ(inner(t))` over the range of `inner`.
    pub fn compose(&self, inner: &DistanceControl) -> Result<Control> {
        let squares = inner.table().iter().map(|&m| self.at_sq(m)).collect::<Result<Vec<_>>>()?;
        Ok(Control { squares })
    }

    /// Multiplies `ρ` by `factor` (so squares by `factor²`).
    pub fn scaled(&self, factor: Rational) -> Control {
        Control { squares: self.squares.iter().map(|x| *x * factor * factor).collect() }
    }

    /// Restriction to `0..=max`.
    pub fn truncated(&self, max: u32) -> Result<Control> {
        if max > self.max_arg() {
            return Err(Error::Config(format!("cannot extend control from {} to {max}", self.max_arg())));
        }
        Ok(Control { squares: self.squares[..=max as usize].to_vec() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceControl {
    table: Vec<u64>,
}

impl DistanceControl {
    pub fn from_table(table: Vec<u64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Config("distance control table is empty".into()));
        }
        if table.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("distance control table must be non-decreasing".into()));
        }
        Ok(DistanceControl { table })
    }

    /// `t ↦ k·t` on `0..=max`.
    pub fn scaled_identity(k: u64, max: u32) -> Self {
        DistanceControl { table: (0..=max as u64).map(|t| k * t).collect() }
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn max_arg(&self) -> u32 {
        self.table.len() as u32 - 1
    }

    pub fn at(&self, t: u64) -> Result<u64> {
        self.table.get(t as usize).copied().ok_or_else(|| {
            Error::Config(format!("distance control evaluated at {t}, table covers 0..={}", self.max_arg()))
        })
    }

    pub fn reaches(&self, threshold: u64) -> bool {
        self.table[self.table.len() - 1] >= threshold
    }
}
