//! One-class training against latent-space Gaussian pseudo-negatives.
//!
//! Target features go through the extractor head; pseudo-negatives are drawn
//! directly in the head's output space from `N(mu, sigma^2 I)`. Both halves
//! are stacked into one batch, instance-normalized, and classified. The
//! whole network is trained with binary cross-entropy and Adam.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::FeatureSet;
use crate::nn::{bce_loss, AdamState, Network, NetworkConfig, LABEL_NOISE, LABEL_TARGET, TARGET};
use crate::numerics::{gaussian_sample, Matrix};
use crate::{Error, Result, Rng};

/// When fresh pseudo-negatives are drawn during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resample {
    /// New draws for every mini-batch.
    Batch,
    /// One pool per epoch, sliced in step with the target batches.
    Epoch,
    /// One pool for the whole run.
    Once,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Standard deviation of the pseudo-negative Gaussian.
    pub sigma: f64,
    /// Mean of every pseudo-negative coordinate.
    pub mu: f64,
    pub lr: f64,
    /// Target rows per mini-batch; each batch also holds as many pseudo-negatives.
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub resample: Resample,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sigma: 0.01,
            mu: 0.0,
            lr: 1e-4,
            batch_size: 64,
            epochs: 50,
            seed: 0,
            resample: Resample::Batch,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(alloc::format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::Parameter("mu must be finite".into()));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Parameter(alloc::format!(
                "learning rate must be >= 0, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Parameter("batch size and epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Training settings recorded alongside a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub config: TrainConfig,
    /// Mean loss of the last epoch; `None` for untrained models.
    pub final_loss: Option<f64>,
}

/// A trained (or freshly initialized) one-class network.
#[derive(Clone, Debug, PartialEq)]
pub struct OcCnnModel {
    pub network: Network,
    pub provenance: Provenance,
}

impl OcCnnModel {
    pub fn new(network: Network, provenance: Provenance) -> Self {
        OcCnnModel { network, provenance }
    }

    pub fn input_dim(&self) -> usize {
        self.network.config().input_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.network.config().feature_dim()
    }
}

/// `k` pseudo-negative rows of width `d`, each coordinate `N(cfg.mu, cfg.sigma^2)`.
pub fn generate_pseudo_negatives(rng: &mut Rng, k: usize, d: usize, cfg: &TrainConfig) -> Result<Matrix> {
    gaussian_sample(rng, k, d, cfg.mu, cfg.sigma)
}

/// Stacks real rows over pseudo-negative rows and labels them
/// `1` (target) and `0` (pseudo-negative) respectively.
pub fn assemble_batch(real: &Matrix, pseudo: &Matrix) -> Result<(Matrix, Vec<u8>)> {
    if real.shape() != pseudo.shape() {
        return Err(Error::Input(alloc::format!(
            "real batch is {}x{} but pseudo-negative batch is {}x{}",
            real.rows(),
            real.cols(),
            pseudo.rows(),
            pseudo.cols()
        )));
    }
    Ok((real.vstack(pseudo)?, batch_labels(real.rows())))
}

fn batch_labels(k: usize) -> Vec<u8> {
    let mut labels = vec![LABEL_TARGET; k];
    labels.resize(2 * k, LABEL_NOISE);
    labels
}

/// Trains a network on target features against pseudo-negatives.
///
/// Returns the model and the mean loss of every epoch. Each epoch shuffles
/// the targets and walks them in slices of `batch_size`; a trailing partial
/// slice is paired with an equal number of pseudo-negatives.
pub fn train(features: &FeatureSet, cfg: &TrainConfig, net_cfg: &NetworkConfig) -> Result<(OcCnnModel, Vec<f64>)> {
    cfg.validate()?;
    net_cfg.validate()?;
    if features.is_empty() {
        return Err(Error::Input("cannot train on an empty feature set".into()));
    }
    if features.d() != net_cfg.input_dim {
        return Err(Error::Shape {
            op: "train",
            expected: (features.n(), net_cfg.input_dim),
            found: features.data.shape(),
        });
    }

    let root = Rng::new(cfg.seed);
    let mut init_rng = root.substream("init");
    let mut shuffle_rng = root.substream("shuffle");
    let mut noise_rng = root.substream("noise");

    let mut network = Network::init(net_cfg.clone(), &mut init_rng)?;
    let mut adam = AdamState::for_network(&network, cfg.lr);
    let n = features.n();
    let d = net_cfg.feature_dim();
    let k = cfg.batch_size;

    let mut pool = match cfg.resample {
        Resample::Once => Some(generate_pseudo_negatives(&mut noise_rng, n, d, cfg)?),
        _ => None,
    };
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.resample == Resample::Epoch {
            pool = Some(generate_pseudo_negatives(&mut noise_rng, n, d, cfg)?);
        }
        let order = shuffle_rng.permutation(n);
        let mut loss_sum = 0.0;
        for (batch, start) in (0..n).step_by(k).enumerate() {
            let end = (start + k).min(n);
            let real = features.data.select_rows(&order[start..end]);
            let pseudo = match &pool {
                Some(p) => p.slice_rows(start, end),
                None => generate_pseudo_negatives(&mut noise_rng, end - start, d, cfg)?,
            };
            let labels = batch_labels(end - start);
            let cache = network
                .forward_mixed(&real, Some(&pseudo))
                .map_err(|_| Error::Divergence {
                    epoch,
                    batch,
                    loss: f64::NAN,
                })?;
            let loss = bce_loss(cache.probs(), &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch, loss });
            }
            let grads = network.backward(&cache, &labels)?;
            adam.step_network(&mut network, &grads)?;
            if network.check_finite().is_err() || network.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { epoch, batch, loss });
            }
            loss_sum += loss * (2 * (end - start)) as f64;
        }
        history.push(loss_sum / (2 * n) as f64);
    }

    let provenance = Provenance {
        config: cfg.clone(),
        final_loss: history.last().copied(),
    };
    Ok((OcCnnModel::new(network, provenance), history))
}

/// Classifier input representation (head output after normalization).
pub fn extract_features(model: &OcCnnModel, x: &Matrix) -> Result<Matrix> {
    model.network.extract_features(x)
}

/// Target-class probability for already-extracted feature rows.
pub fn score_features(model: &OcCnnModel, features: &Matrix) -> Result<Vec<f64>> {
    let probs = model.network.classify(features)?;
    Ok(probs.row_iter().map(|p| p[TARGET]).collect())
}

/// Target-class probability for input-space rows; higher is more target-like.
pub fn score(model: &OcCnnModel, x: &Matrix) -> Result<Vec<f64>> {
    score_features(model, &extract_features(model, x)?)
}

/// Scores rows that live in the latent space (e.g. pseudo-negative draws),
/// bypassing the head.
pub fn score_latent(model: &OcCnnModel, latent: &Matrix) -> Result<Vec<f64>> {
    score_features(model, &model.network.normalize(latent)?)
}
