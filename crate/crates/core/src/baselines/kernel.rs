use crate::numerics::{dot_product, Matrix};
use crate::{math, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `exp(-gamma * |x - y|^2)`
    Rbf {
        gamma: f64,
    },
}

impl KernelSpec {
    /// RBF with `gamma = 1 / (D * var(x))`, the variance taken over all
    /// entries of `x`. Falls back to `1 / D` for constant data.
    pub fn auto_rbf(x: &Matrix) -> KernelSpec {
        let vals = x.as_slice();
        let d = x.cols().max(1) as f64;
        let n = vals.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let gamma = if var > 0.0 { 1.0 / (d * var) } else { 1.0 / d };
        KernelSpec::Rbf { gamma }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0) || !gamma.is_finite() => Err(Error::Parameter(alloc::format!(
                "rbf gamma must be positive, got {gamma}"
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot_product(a, b),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                math::exp(-gamma * d2)
            }
        }
    }

    /// Symmetric Gram matrix of the rows of `x`.
    pub fn gram(&self, x: &Matrix) -> Matrix {
        let n = x.rows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(x.row(i), x.row(j));
                k.set(i, j, v);
                k.set(j, i, v);
            }
        }
        k
    }
}
