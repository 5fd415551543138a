//! One-class classification on precomputed feature vectors.
//!
//! A trainable extractor head maps target-class features into a latent
//! space, where they are contrasted against pseudo-negatives drawn from a
//! zero-centered isotropic Gaussian. A small classifier trained with binary
//! cross-entropy turns that contrast into a target-likeness score.
//!
//! The crate also carries the classical one-class baselines (OC-SVM, SVDD,
//! single-class MPM, binary SVM against Gaussian noise), AUROC evaluation,
//! and the split protocols used to benchmark all of them.
//!
//! Everything here is `no_std` + `alloc`; file formats, manifests and the
//! command-line interface live in the `occnn` companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod baselines;
pub mod data;
mod error;
pub mod eval;
pub(crate) mod math;
pub mod methods;
pub mod nn;
pub mod numerics;
pub mod occnn;

pub use error::{Error, Result};
pub use numerics::{Matrix, Rng};
