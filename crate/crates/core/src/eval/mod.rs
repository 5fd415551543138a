//! AUROC, ROC curves and the per-class benchmark harness.

mod benchmark;
mod roc;

pub use benchmark::{run_benchmark, run_cell, BenchmarkResult, CellFailure, EvalReport, OneClassMethod, Scorer};
pub use roc::{auroc, mann_whitney_u2, roc_curve, trapezoid_area};
