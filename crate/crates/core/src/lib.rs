//! Executable box families, fibred cofinitely-coarse embeddings and the two
//! directions of the Haagerup-property characterization for residually
//! amenable groups, on a small catalog of concrete groups with exact
//! arithmetic.

pub mod chains;
pub mod cli;
pub mod coarse;
pub mod config;
pub mod control;
pub mod error;
pub mod fibred;
pub mod groups;
pub mod hilbert;
pub mod manifest;
pub mod pipeline;
pub mod rational;
pub mod report;

pub use error::{Error, Result};

/// Exact scalar used for Hilbert-space coordinates, kernels and controls.
pub type Rational = num_rational::Ratio<i64>;
