//! Classical one-class comparison methods.
//!
//! - [`OcSvmModel`]: ν-one-class SVM, a max-margin hyperplane against the origin.
//! - [`SvddModel`]: support vector data description, the smallest enclosing
//!   ball in kernel space.
//! - [`MpmModel`]: single-class minimax-probability-style hyperplane on
//!   PCA-reduced features.
//! - [`BsvmModel`]: linear binary SVM with Gaussian noise as negatives.
//! - [`OcSvmPlusModel`]: OC-SVM fit on features extracted by a trained
//!   one-class network.
//!
//! OC-SVM and SVDD share one SMO solver for quadratic programs over the
//! capped simplex `{ 0 <= a_i <= C, sum a = 1 }`.

mod bsvm;
mod kernel;
mod mpm;
mod ocsvm;
mod smo;
mod svdd;

pub use bsvm::{bsvm_fit, bsvm_hinge_objective, BsvmModel, BsvmParams};
pub use kernel::KernelSpec;
pub use mpm::{mpm_fit, MpmModel, MpmParams};
pub use ocsvm::{ocsvm_fit, ocsvm_plus_fit, OcSvmModel, OcSvmPlusModel};
pub use smo::{solve_capped_simplex_qp, QpSolution, SolverParams};
pub use svdd::{svdd_fit, SvddModel};

/// Diagnostics from a dual solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Maximal KKT violation at termination.
    pub kkt_residual: f64,
    /// Dual objective value at the solution.
    pub objective: f64,
}
