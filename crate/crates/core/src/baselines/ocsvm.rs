use alloc::vec::Vec;

use super::smo::{equality_multiplier, solve_capped_simplex_qp, SolverParams};
use super::{FitDiagnostics, KernelSpec};
use crate::data::FeatureSet;
use crate::numerics::Matrix;
use crate::occnn::{extract_features, OcCnnModel};
use crate::{Error, Result};

/// ν-one-class SVM: `f(x) = sum_i a_i k(x_i, x) - rho`.
///
/// Only support vectors (`a_i > 0`) are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct OcSvmModel {
    pub support: Matrix,
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub nu: f64,
    pub kernel: KernelSpec,
    pub n_train: usize,
    pub diagnostics: FitDiagnostics,
}

pub(crate) fn check_training_set(x: &FeatureSet) -> Result<()> {
    if x.n() < 2 {
        return Err(Error::Input(alloc::format!(
            "need at least 2 training samples, got {}",
            x.n()
        )));
    }
    Ok(())
}

/// Solves the dual `min ½ aᵀ K a` s.t. `0 <= a_i <= 1/(nu n)`, `sum a = 1`.
pub fn ocsvm_fit(x: &FeatureSet, nu: f64, kernel: KernelSpec, params: &SolverParams) -> Result<OcSvmModel> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Parameter(alloc::format!("nu must lie in (0, 1], got {nu}")));
    }
    kernel.validate()?;
    check_training_set(x)?;
    let n = x.n();
    let c = 1.0 / (nu * n as f64);
    let gram = kernel.gram(&x.data);
    let sol = solve_capped_simplex_qp(&gram, &alloc::vec![0.0; n], c, params)?;
    let rho = equality_multiplier(&sol.alpha, &sol.gradient, c);

    let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(OcSvmModel {
        support: x.data.select_rows(&sv),
        alpha: sv.iter().map(|&i| sol.alpha[i]).collect(),
        rho,
        nu,
        kernel,
        n_train: n,
        diagnostics: FitDiagnostics {
            iterations: sol.iterations,
            kkt_residual: sol.kkt_residual,
            objective: sol.objective,
        },
    })
}

impl OcSvmModel {
    /// Upper bound `1/(nu n)` on each dual coefficient.
    pub fn box_bound(&self) -> f64 {
        1.0 / (self.nu * self.n_train as f64)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .row_iter()
            .zip(&self.alpha)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            - self.rho
    }

    /// Signed decision values; higher is more target-like.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.support.cols() {
            return Err(Error::Shape {
                op: "ocsvm_score",
                expected: (x.rows(), self.support.cols()),
                found: x.shape(),
            });
        }
        Ok(x.row_iter().map(|r| self.decision(r)).collect())
    }

    /// Indices (into `support`) of margin support vectors, `0 < a < 1/(nu n)`.
    pub fn margin_support(&self) -> Vec<usize> {
        let c = self.box_bound();
        (0..self.alpha.len()).filter(|&i| self.alpha[i] < c).collect()
    }
}

/// OC-SVM trained on features extracted by a one-class network.
#[derive(Clone, Debug, PartialEq)]
pub struct OcSvmPlusModel {
    pub extractor: OcCnnModel,
    pub svm: OcSvmModel,
}

impl OcSvmPlusModel {
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.svm.score(&extract_features(&self.extractor, x)?)
    }
}

/// Fits an OC-SVM on `extract_features(model, x)`. With `kernel = None` the
/// RBF width is chosen from the extracted features.
pub fn ocsvm_plus_fit(
    model: &OcCnnModel,
    x: &FeatureSet,
    nu: f64,
    kernel: Option<KernelSpec>,
    params: &SolverParams,
) -> Result<OcSvmPlusModel> {
    let features = FeatureSet::new(extract_features(model, &x.data)?, x.source.clone());
    let kernel = kernel.unwrap_or_else(|| KernelSpec::auto_rbf(&features.data));
    Ok(OcSvmPlusModel {
        extractor: model.clone(),
        svm: ocsvm_fit(&features, nu, kernel, params)?,
    })
}
