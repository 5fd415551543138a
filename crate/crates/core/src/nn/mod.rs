//! Minimal dense network stack: dense layers, ReLU, per-sample instance
//! normalization, two-way softmax, binary cross-entropy, exact
//! backpropagation and Adam.

mod adam;
mod layers;
mod loss;
mod network;
mod norm;

pub use adam::AdamState;
pub use layers::{Activation, DenseLayer};
pub use loss::{bce_loss, softmax2, PROB_CLAMP};
pub use network::{ForwardCache, Gradients, Network, NetworkConfig};
pub use norm::{instance_norm, InstanceNormSpec};

/// Column of the softmax output holding the target-class probability.
pub const TARGET: usize = 0;
/// Column of the softmax output holding the pseudo-negative probability.
pub const NOISE: usize = 1;

/// Label value for target-class rows.
pub const LABEL_TARGET: u8 = 1;
/// Label value for pseudo-negative rows.
pub const LABEL_NOISE: u8 = 0;
