use alloc::vec::Vec;

use crate::data::FeatureSet;
use crate::numerics::{dot_product, solve_spd, symmetric_eigen, Matrix};
use crate::{math, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpmParams {
    /// Number of principal components kept; `None` means `min(16, D, n - 1)`.
    pub pca_dims: Option<usize>,
    /// Ridge added to the projected covariance.
    pub lambda: f64,
    /// Lower quantile of training scores used as the threshold.
    pub quantile: f64,
}

impl Default for MpmParams {
    fn default() -> Self {
        MpmParams {
            pca_dims: None,
            lambda: 1e-3,
            quantile: 0.05,
        }
    }
}

/// Single-class second-order hyperplane on PCA-reduced features.
///
/// Features are projected as `z = Vᵀ x` onto the leading principal
/// directions `V` (uncentered, so the class mean stays away from the
/// origin). With projected mean `m` and covariance `S`, the normal is
/// `w ∝ (S + lambda I)^-1 m`, scaled so that `wᵀ m = 1`; the score is
/// `wᵀ z - rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpmModel {
    /// `D x p`, orthonormal columns.
    pub basis: Matrix,
    /// Training mean in input space (used to compute the principal directions).
    pub mean: Vec<f64>,
    pub w: Vec<f64>,
    pub rho: f64,
    pub lambda: f64,
}

/// Leading `p` principal directions of the rows of `x` as columns.
fn principal_directions(x: &Matrix, mean: &[f64], p: usize) -> Result<Matrix> {
    let (n, d) = x.shape();
    let mut centered = x.clone();
    for r in 0..n {
        for (v, m) in centered.row_mut(r).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    let mut basis = Matrix::zeros(d, p);
    if d <= n {
        let cov = centered.transpose().matmul(&centered)?.scale(scale);
        let eig = symmetric_eigen(&cov)?;
        for k in 0..p {
            for r in 0..d {
                basis.set(r, k, eig.vectors.get(r, k));
            }
        }
    } else {
        // n < D: decompose the n x n Gram matrix and map back.
        let gram = centered.matmul(&centered.transpose())?.scale(scale);
        let eig = symmetric_eigen(&gram)?;
        let ct = centered.transpose();
        for k in 0..p {
            let lam = eig.values[k];
            if !(lam > 1e-12 * eig.values[0].abs().max(1e-300)) {
                return Err(Error::Numerical(alloc::format!(
                    "principal component {k} has zero variance; reduce pca_dims"
                )));
            }
            let u: Vec<f64> = (0..n).map(|r| eig.vectors.get(r, k)).collect();
            let v = ct.matvec(&u)?;
            let norm = math::sqrt(dot_product(&v, &v));
            for r in 0..d {
                basis.set(r, k, v[r] / norm);
            }
        }
    }
    Ok(basis)
}

fn lower_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mpm_fit(x: &FeatureSet, params: &MpmParams) -> Result<MpmModel> {
    let (n, d) = x.data.shape();
    if n < 2 {
        return Err(Error::Input(alloc::format!("MPM needs at least 2 samples, got {n}")));
    }
    let max_dims = (n - 1).min(d);
    let p = params.pca_dims.unwrap_or_else(|| 16.min(max_dims));
    if p < 1 || p > max_dims {
        return Err(Error::Parameter(alloc::format!(
            "pca_dims must lie in [1, {max_dims}], got {p}"
        )));
    }
    if !(params.lambda > 0.0) || !params.lambda.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    if !(0.0..=1.0).contains(&params.quantile) {
        return Err(Error::Parameter(alloc::format!(
            "quantile must lie in [0, 1], got {}",
            params.quantile
        )));
    }

    let mean = x.data.column_means();
    let basis = principal_directions(&x.data, &mean, p)?;
    let z = x.data.matmul(&basis)?;
    let mu = z.column_means();
    let mut cov = Matrix::zeros(p, p);
    for row in z.row_iter() {
        for a in 0..p {
            for b in 0..p {
                let v = cov.get(a, b) + (row[a] - mu[a]) * (row[b] - mu[b]);
                cov.set(a, b, v);
            }
        }
    }
    let mut reg = cov.scale(1.0 / (n as f64 - 1.0));
    for a in 0..p {
        let v = reg.get(a, a) + params.lambda;
        reg.set(a, a, v);
    }
    let raw = solve_spd(&reg, &mu)?;
    let norm = dot_product(&raw, &mu);
    if !(norm > 0.0) {
        return Err(Error::Numerical(
            "projected class mean is at the origin; the hyperplane is undefined".into(),
        ));
    }
    let w: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let train_scores: Vec<f64> = z.row_iter().map(|r| dot_product(&w, r)).collect();
    let rho = lower_quantile(&train_scores, params.quantile);
    Ok(MpmModel {
        basis,
        mean,
        w,
        rho,
        lambda: params.lambda,
    })
}

impl MpmModel {
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.basis.rows() {
            return Err(Error::Shape {
                op: "mpm_score",
                expected: (x.rows(), self.basis.rows()),
                found: x.shape(),
            });
        }
        x.matmul(&self.basis)
    }

    /// Raw hyperplane value `wᵀ z` without the threshold.
    pub fn margin(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.project(x)?.row_iter().map(|z| dot_product(&self.w, z)).collect())
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.margin(x)?.into_iter().map(|m| m - self.rho).collect())
    }
}
