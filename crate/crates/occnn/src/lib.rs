//! File formats, manifests and the `occnn` command-line tool built on
//! [`occnn_core`].

#![forbid(unsafe_code)]

pub mod baseline_file;
pub mod cli;
mod container;
pub mod error;
pub mod features;
pub mod manifest;
pub mod model_file;

pub use error::{Error, Result};
