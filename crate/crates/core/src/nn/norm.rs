use alloc::vec::Vec;

use crate::numerics::Matrix;
use crate::{math, Error, Result};

/// Per-sample normalization across the feature channels of a row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceNormSpec {
    pub epsilon: f64,
    /// Learn a per-channel scale and shift after standardization.
    pub affine: bool,
}

impl Default for InstanceNormSpec {
    fn default() -> Self {
        InstanceNormSpec {
            epsilon: 1e-5,
            affine: false,
        }
    }
}

impl InstanceNormSpec {
    pub fn validate(&self, width: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(alloc::format!(
                "instance-norm epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if width < 2 {
            return Err(Error::Parameter(
                "instance normalization needs at least 2 channels per row".into(),
            ));
        }
        Ok(())
    }
}

/// Standardizes each row: `(x - mean) / sqrt(var + eps)` with population
/// variance. With `affine` set, the identity scale/shift is applied (the
/// learned parameters live in [`Network`](super::Network)).
pub fn instance_norm(x: &Matrix, spec: &InstanceNormSpec) -> Result<Matrix> {
    spec.validate(x.cols())?;
    Ok(normalize_rows(x, spec.epsilon).0)
}

/// Normalized rows plus the per-row inverse standard deviation.
pub(crate) fn normalize_rows(x: &Matrix, eps: f64) -> (Matrix, Vec<f64>) {
    let d = x.cols() as f64;
    let mut out = x.clone();
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = out.row_mut(r);
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let s = 1.0 / math::sqrt(var + eps);
        for v in row.iter_mut() {
            *v = (*v - mean) * s;
        }
        inv_std.push(s);
    }
    (out, inv_std)
}

/// Input gradient of [`normalize_rows`] given the upstream gradient with
/// respect to the normalized output.
pub(crate) fn normalize_rows_backward(normalized: &Matrix, inv_std: &[f64], grad: &Matrix) -> Matrix {
    let d = normalized.cols() as f64;
    let mut out = grad.clone();
    for r in 0..grad.rows() {
        let xhat = normalized.row(r);
        let g = grad.row(r);
        let mean_g = g.iter().sum::<f64>() / d;
        let mean_gx = g.iter().zip(xhat).map(|(a, b)| a * b).sum::<f64>() / d;
        let s = inv_std[r];
        for ((o, &gi), &xi) in out.row_mut(r).iter_mut().zip(g).zip(xhat) {
            *o = s * (gi - mean_g - xi * mean_gx);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    const TIGHT: InstanceNormSpec = InstanceNormSpec {
        epsilon: 1e-12,
        affine: false,
    };

    #[test]
    fn one_two_three() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let y = instance_norm(&x, &TIGHT).unwrap();
        let e = math::sqrt(1.5);
        for (got, want) in y.row(0).iter().zip([-e, 0.0, e]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!((y.get(0, 2) - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_row_maps_to_zero() {
        let x = Matrix::from_rows(&[[5.0, 5.0, 5.0]]).unwrap();
        let y = instance_norm(&x, &InstanceNormSpec::default()).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_channel_rejected() {
        let x = Matrix::from_rows(&[[5.0]]).unwrap();
        assert!(matches!(
            instance_norm(&x, &InstanceNormSpec::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn random_rows_are_standardized() {
        let mut rng = Rng::new(5);
        let data = (0..40 * 9).map(|_| rng.uniform_range(-30.0, 50.0)).collect();
        let x = Matrix::from_vec(40, 9, data).unwrap();
        let y = instance_norm(&x, &InstanceNormSpec::default()).unwrap();
        for row in y.row_iter() {
            let mean = row.iter().sum::<f64>() / 9.0;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }
}
