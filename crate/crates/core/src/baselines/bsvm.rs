use alloc::vec;
use alloc::vec::Vec;

use crate::data::FeatureSet;
use crate::numerics::{dot_product, gaussian_sample, Matrix};
use crate::{math, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsvmParams {
    /// Standard deviation of the Gaussian negatives.
    pub sigma: f64,
    /// L2 regularization strength.
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for BsvmParams {
    fn default() -> Self {
        BsvmParams {
            sigma: 0.01,
            lambda: 1e-2,
            iterations: 2000,
        }
    }
}

/// Linear binary SVM separating the target class from zero-centered noise.
#[derive(Clone, Debug, PartialEq)]
pub struct BsvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// Hinge objective of the averaged iterate, sampled at 20 evenly spaced
    /// checkpoints.
    pub objective_trace: Vec<f64>,
}

impl BsvmModel {
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.w.len() {
            return Err(Error::Shape {
                op: "bsvm_score",
                expected: (x.rows(), self.w.len()),
                found: x.shape(),
            });
        }
        Ok(x.row_iter().map(|r| dot_product(&self.w, r) + self.b).collect())
    }
}

/// `lambda/2 |w|^2 + mean_i max(0, 1 - y_i (wᵀx_i + b))`.
pub fn bsvm_hinge_objective(x: &Matrix, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let hinge: f64 = x
        .row_iter()
        .zip(y)
        .map(|(r, &yi)| (1.0 - yi * (dot_product(w, r) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot_product(w, w) + hinge / x.rows() as f64
}

/// Draws `n` negatives from `N(0, sigma^2 I)` and fits a linear soft-margin
/// SVM by deterministic full-batch subgradient descent (step `1/(lambda t)`,
/// projection onto the ball of radius `1/sqrt(lambda)`), returning the
/// average of all iterates.
pub fn bsvm_fit(x: &FeatureSet, params: &BsvmParams, rng: &mut Rng) -> Result<BsvmModel> {
    if x.is_empty() {
        return Err(Error::Input("BSVM needs at least one target sample".into()));
    }
    if !(params.lambda > 0.0) || !params.lambda.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    if params.iterations == 0 {
        return Err(Error::Parameter("iterations must be at least 1".into()));
    }
    let (n, d) = x.data.shape();
    let negatives = gaussian_sample(rng, n, d, 0.0, params.sigma)?;
    let data = x.data.vstack(&negatives)?;
    let mut y = vec![1.0; n];
    y.resize(2 * n, -1.0);
    let m = (2 * n) as f64;
    let radius = 1.0 / math::sqrt(params.lambda);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; d];
    let mut b_avg = 0.0;
    let checkpoint = (params.iterations / 20).max(1);
    let mut trace = Vec::new();
    for t in 1..=params.iterations {
        let eta = 1.0 / (params.lambda * t as f64);
        let mut gw: Vec<f64> = w.iter().map(|v| params.lambda * v).collect();
        let mut gb = 0.0;
        for (row, &yi) in data.row_iter().zip(&y) {
            if yi * (dot_product(&w, row) + b) < 1.0 {
                for (g, v) in gw.iter_mut().zip(row) {
                    *g -= yi * v / m;
                }
                gb -= yi / m;
            }
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= eta * g;
        }
        b -= eta * gb;
        let norm = math::sqrt(dot_product(&w, &w));
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        b = b.clamp(-radius, radius);

        let k = t as f64;
        for (a, v) in w_avg.iter_mut().zip(&w) {
            *a += (v - *a) / k;
        }
        b_avg += (b - b_avg) / k;
        if t % checkpoint == 0 {
            trace.push(bsvm_hinge_objective(&data, &y, &w_avg, b_avg, params.lambda));
        }
    }
    Ok(BsvmModel {
        w: w_avg,
        b: b_avg,
        lambda: params.lambda,
        sigma: params.sigma,
        objective_trace: trace,
    })
}
