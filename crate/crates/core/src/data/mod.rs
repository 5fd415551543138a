//! Feature sets, split protocols and synthetic data generators.

mod protocols;
mod synth;

use alloc::string::String;

pub use protocols::{
    build_abnormality_protocol, build_auth_protocol, build_novelty_protocol, ProtocolSplit, RowRef,
    DEFAULT_NOVEL_PER_CLASS,
};
pub use synth::{synth_dataset, SynthKind, SynthParams};

use crate::numerics::Matrix;

/// `n x d` block of feature vectors with a source tag (usually the class
/// name or the file it came from).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub data: Matrix,
    pub source: String,
}

impl FeatureSet {
    pub fn new(data: Matrix, source: impl Into<String>) -> Self {
        FeatureSet {
            data,
            source: source.into(),
        }
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.n() == 0
    }
}
