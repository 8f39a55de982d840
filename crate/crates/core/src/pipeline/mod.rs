//! Both directions of the characterization, run on concrete certificates:
//! cocycle to fibred embedding, and fibred embedding to a proper
//! conditionally negative definite function via `k_r`, `φ_r` and `ψ_r`.

mod backward;
mod forward;
mod mean;

pub use backward::{
    backward_level, build_kernel_kr, build_phi, build_psi, check_limit, envelope, limit_psi, AveragedFormsReport,
    BackwardOptions, KernelKr, KernelMismatch, KernelReport, LimitCheck, LimitEntry, LimitTable, PhiValue, PsiBuild,
    PsiTable, SymmetryRow,
};
pub use forward::{attained_mismatches, forward, CocycleOracle};
pub use mean::{foelner_box, foelner_defect, MeanProvider, MeanSet};

use crate::error::Error;

fn scope_err(msg: String) -> Error {
    Error::Scope(msg)
}
