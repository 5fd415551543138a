use crate::numerics::Matrix;
use crate::{math, Error, Result};

use super::{LABEL_NOISE, LABEL_TARGET, NOISE, TARGET};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-12;

/// Numerically stable two-way softmax.
#[inline]
pub fn softmax2(z0: f64, z1: f64) -> (f64, f64) {
    let m = if z0 > z1 { z0 } else { z1 };
    let e0 = math::exp(z0 - m);
    let e1 = math::exp(z1 - m);
    let s = e0 + e1;
    (e0 / s, e1 / s)
}

#[inline]
pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

pub(crate) fn check_labels(labels: &[u8], rows: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::Input(alloc::format!("{} labels for {rows} rows", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l != LABEL_TARGET && l != LABEL_NOISE) {
        return Err(Error::Input(alloc::format!("label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Mean binary cross-entropy over the batch.
///
/// Target rows (label 1) are scored by the clamped target probability,
/// pseudo-negative rows (label 0) by the clamped noise probability.
pub fn bce_loss(probs: &Matrix, labels: &[u8]) -> Result<f64> {
    if probs.cols() != 2 {
        return Err(Error::Shape {
            op: "bce_loss",
            expected: (probs.rows(), 2),
            found: probs.shape(),
        });
    }
    check_labels(labels, probs.rows())?;
    if probs.rows() == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    let total: f64 = probs
        .row_iter()
        .zip(labels)
        .map(|(p, &y)| {
            let col = if y == LABEL_TARGET { TARGET } else { NOISE };
            -math::ln(clamp_prob(p[col]))
        })
        .sum();
    Ok(total / probs.rows() as f64)
}
