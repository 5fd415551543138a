use alloc::vec::Vec;

use super::ocsvm::check_training_set;
use super::smo::{equality_multiplier, solve_capped_simplex_qp, SolverParams};
use super::{FitDiagnostics, KernelSpec};
use crate::data::FeatureSet;
use crate::numerics::{dot_product, Matrix};
use crate::{Error, Result};

/// Smallest enclosing ball in kernel space, with slack bounded by `C`.
///
/// `score(x) = R^2 - |phi(x) - a|^2`, positive inside the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SvddModel {
    pub support: Matrix,
    pub alpha: Vec<f64>,
    /// Squared radius.
    pub r2: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    /// `|a|^2 = aᵀ K a`, cached for scoring.
    pub center_norm2: f64,
    pub n_train: usize,
    pub diagnostics: FitDiagnostics,
}

/// Solves `max sum a_i k(x_i, x_i) - aᵀ K a` s.t. `0 <= a_i <= c`, `sum a = 1`.
pub fn svdd_fit(x: &FeatureSet, c: f64, kernel: KernelSpec, params: &SolverParams) -> Result<SvddModel> {
    kernel.validate()?;
    check_training_set(x)?;
    let n = x.n();
    if !(c * n as f64 >= 1.0) || !c.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "SVDD needs C >= 1/n = {}, got {c}",
            1.0 / n as f64
        )));
    }
    let gram = kernel.gram(&x.data);
    let q = gram.scale(2.0);
    let p: Vec<f64> = (0..n).map(|i| -gram.get(i, i)).collect();
    let sol = solve_capped_simplex_qp(&q, &p, c, params)?;

    let k_alpha = gram.matvec(&sol.alpha)?;
    let center_norm2 = dot_product(&sol.alpha, &k_alpha);
    // gradient g_i = 2 (K a)_i - K_ii = center_norm2 - dist_i^2
    let b = equality_multiplier(&sol.alpha, &sol.gradient, c);
    let r2 = (center_norm2 - b).max(0.0);

    let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvddModel {
        support: x.data.select_rows(&sv),
        alpha: sv.iter().map(|&i| sol.alpha[i]).collect(),
        r2,
        c,
        kernel,
        center_norm2,
        n_train: n,
        diagnostics: FitDiagnostics {
            iterations: sol.iterations,
            kkt_residual: sol.kkt_residual,
            // report the maximization objective
            objective: -sol.objective,
        },
    })
}

impl SvddModel {
    /// Squared kernel-space distance from `x` to the center.
    pub fn distance2(&self, x: &[f64]) -> f64 {
        let cross: f64 = self
            .support
            .row_iter()
            .zip(&self.alpha)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum();
        self.kernel.eval(x, x) - 2.0 * cross + self.center_norm2
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.r2 - self.distance2(x)
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.support.cols() {
            return Err(Error::Shape {
                op: "svdd_score",
                expected: (x.rows(), self.support.cols()),
                found: x.shape(),
            });
        }
        Ok(x.row_iter().map(|r| self.decision(r)).collect())
    }

    /// Center in input space; only meaningful for the linear kernel.
    pub fn linear_center(&self) -> Vec<f64> {
        let mut center = alloc::vec![0.0; self.support.cols()];
        for (sv, a) in self.support.row_iter().zip(&self.alpha) {
            for (c, v) in center.iter_mut().zip(sv) {
                *c += a * v;
            }
        }
        center
    }

    pub fn margin_support(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] < self.c).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_sample;
    use crate::{math, Rng};

    fn line(points: &[f64]) -> FeatureSet {
        FeatureSet::new(Matrix::from_vec(points.len(), 1, points.to_vec()).unwrap(), "line")
    }

    #[test]
    fn two_points_on_a_line() {
        let m = svdd_fit(&line(&[-1.0, 1.0]), 10.0, KernelSpec::Linear, &SolverParams::default()).unwrap();
        assert!(m.linear_center()[0].abs() < 1e-6);
        assert!((math::sqrt(m.r2) - 1.0).abs() < 1e-6);
        for i in m.margin_support() {
            assert!(m.decision(m.support.row(i)).abs() < 1e-6);
        }
        let s = m.score(&Matrix::from_rows(&[[0.0]]).unwrap()).unwrap();
        assert!((s[0] - m.r2).abs() < 1e-6);
    }

    #[test]
    fn duplicated_points_give_the_same_ball() {
        let x = FeatureSet::new(gaussian_sample(&mut Rng::new(6), 15, 2, 0.0, 1.0).unwrap(), "x");
        let doubled = FeatureSet::new(x.data.vstack(&x.data).unwrap(), "xx");
        let params = SolverParams {
            tol: 1e-10,
            ..SolverParams::default()
        };
        let a = svdd_fit(&x, 1.0, KernelSpec::Linear, &params).unwrap();
        let b = svdd_fit(&doubled, 1.0, KernelSpec::Linear, &params).unwrap();
        assert!((a.r2 - b.r2).abs() < 1e-6);
        for (p, q) in a.linear_center().iter().zip(b.linear_center()) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_score_matches_explicit_center() {
        let x = FeatureSet::new(gaussian_sample(&mut Rng::new(7), 30, 3, 2.0, 1.0).unwrap(), "x");
        let m = svdd_fit(&x, 0.1, KernelSpec::Linear, &SolverParams::default()).unwrap();
        let center = m.linear_center();
        let probe = gaussian_sample(&mut Rng::new(70), 8, 3, 0.0, 3.0).unwrap();
        for (row, s) in probe.row_iter().zip(m.score(&probe).unwrap()) {
            let d2: f64 = row.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((m.r2 - d2 - s).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_c() {
        assert!(matches!(
            svdd_fit(
                &line(&[0.0, 1.0, 2.0]),
                0.2,
                KernelSpec::Linear,
                &SolverParams::default()
            ),
            Err(Error::Parameter(_))
        ));
    }
}
