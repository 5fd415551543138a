use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::Matrix;
use crate::{math, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer computing `x · W + b`.
///
/// `weights` is `in_dim x out_dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(in_dim, out_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let bound = Self::glorot_bound(in_dim, out_dim);
        let data = (0..in_dim * out_dim)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        DenseLayer {
            weights: Matrix::from_raw(in_dim, out_dim, data),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn glorot_bound(in_dim: usize, out_dim: usize) -> f64 {
        math::sqrt(6.0 / (in_dim + out_dim) as f64)
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = x.matmul(&self.weights)?;
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *o += b;
            }
        }
        Ok(out)
    }

    /// Parameter gradients and the gradient with respect to the input.
    pub(crate) fn backward(&self, input: &Matrix, grad_out: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
        let grad_w = input
            .transpose()
            .matmul(grad_out)
            .expect("dense backward: cached shapes are consistent");
        let mut grad_b = vec![0.0; self.out_dim()];
        for row in grad_out.row_iter() {
            for (g, v) in grad_b.iter_mut().zip(row) {
                *g += v;
            }
        }
        let grad_in = grad_out
            .matmul(&self.weights.transpose())
            .expect("dense backward: cached shapes are consistent");
        (grad_w, grad_b, grad_in)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.bias.iter().all(|b| b.is_finite()) {
            Ok(())
        } else {
            Err(Error::Input("non-finite bias".into()))
        }
    }
}
