//! Sparse Hilbert vectors, affine isometries, the catalog cocycles and
//! conditionally negative definite checks.

mod affine;
mod cnd;
mod cocycle;
mod vector;

pub use affine::{AffineIsometry, LinearOp, LinearPart};
pub use cnd::{
    cnd_check, cnd_function_check, local_subsets, max_mean_zero_eigenvalue, sampled_subsets, CndFunctionReport,
    CndOptions, CndVerdict, Decider, FunctionTable, Locality,
};
pub use cocycle::{properness_profile, Cocycle, CocycleKind, ProperProfile};
pub use vector::{BasisKey, HilbertVec};
