use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{dot_product, Matrix};
use crate::{math, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Pair-update cap.
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    /// Gradient `Q a + p` at the solution.
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
}

const TAU: f64 = 1e-12;

/// Feasible starting point: `C` on the first `floor(1/C)` coordinates and
/// the remainder on the next one.
fn initial_alpha(n: usize, c: f64) -> Vec<f64> {
    let full = (math::floor(1.0 / c + 1e-9) as usize).min(n);
    let mut alpha = vec![0.0; n];
    alpha[..full].iter_mut().for_each(|a| *a = c);
    if full < n {
        alpha[full] = (1.0 - full as f64 * c).max(0.0);
    }
    alpha
}

/// Maximal violating pair `(i, j)`: `i` minimizes the gradient among
/// coordinates that may grow, `j` maximizes it among those that may shrink.
fn select_pair(alpha: &[f64], grad: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut i = None;
    let mut j = None;
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    for (t, (&a, &g)) in alpha.iter().zip(grad).enumerate() {
        if a < c && g < g_min {
            g_min = g;
            i = Some(t);
        }
        if a > 0.0 && g > g_max {
            g_max = g;
            j = Some(t);
        }
    }
    match (i, j) {
        (Some(i), Some(j)) => Some((i, j, g_max - g_min)),
        _ => None,
    }
}

fn full_gradient(q: &Matrix, p: &[f64], alpha: &[f64]) -> Vec<f64> {
    q.row_iter()
        .zip(p)
        .map(|(row, &pi)| dot_product(row, alpha) + pi)
        .collect()
}

/// Minimizes `½ aᵀ Q a + pᵀ a` over `{ 0 <= a_i <= c, sum a = 1 }` by
/// sequential minimal optimization on maximal violating pairs.
///
/// `Q` must be symmetric positive semi-definite and `c >= 1/n`.
pub fn solve_capped_simplex_qp(q: &Matrix, p: &[f64], c: f64, params: &SolverParams) -> Result<QpSolution> {
    let n = p.len();
    if q.shape() != (n, n) {
        return Err(Error::Shape {
            op: "solve_capped_simplex_qp",
            expected: (n, n),
            found: q.shape(),
        });
    }
    if n == 0 {
        return Err(Error::Input("empty problem".into()));
    }
    if !(c * n as f64 >= 1.0 - 1e-12) || !c.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "box bound {c} is infeasible for {n} points (needs C >= 1/n)"
        )));
    }

    let mut alpha = initial_alpha(n, c);
    let mut grad = full_gradient(q, p, &alpha);
    let mut iterations = 0;
    let residual = loop {
        let Some((i, j, violation)) = select_pair(&alpha, &grad, c) else {
            break 0.0;
        };
        if violation <= params.tol {
            // guard against drift in the incrementally updated gradient
            let fresh = full_gradient(q, p, &alpha);
            let drift = fresh.iter().zip(&grad).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            grad = fresh;
            if drift <= 0.1 * params.tol {
                break select_pair(&alpha, &grad, c).map_or(0.0, |(_, _, v)| v.max(0.0));
            }
            continue;
        }
        if iterations >= params.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: violation,
            });
        }
        iterations += 1;

        let mut eta = q.get(i, i) + q.get(j, j) - 2.0 * q.get(i, j);
        if eta <= 0.0 {
            eta = TAU;
        }
        let room_i = c - alpha[i];
        let room_j = alpha[j];
        let delta = ((grad[j] - grad[i]) / eta).min(room_i).min(room_j);
        // land exactly on the bound when clipped
        if delta == room_i {
            alpha[i] = c;
        } else {
            alpha[i] += delta;
        }
        if delta == room_j {
            alpha[j] = 0.0;
        } else {
            alpha[j] -= delta;
        }
        for (t, g) in grad.iter_mut().enumerate() {
            *g += delta * (q.get(t, i) - q.get(t, j));
        }
    };

    let objective = 0.5 * dot_product(&alpha, &full_gradient(q, &vec![0.0; n], &alpha)) + dot_product(p, &alpha);
    Ok(QpSolution {
        alpha,
        gradient: grad,
        iterations,
        kkt_residual: residual,
        objective,
    })
}

/// Multiplier `b` of the equality constraint: the mean gradient over free
/// coordinates, or the midpoint of the feasible interval when none are free.
pub(crate) fn equality_multiplier(alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut lower = f64::NEG_INFINITY; // from coordinates at C: g <= b
    let mut upper = f64::INFINITY; // from coordinates at 0: g >= b
    for (&a, &g) in alpha.iter().zip(grad) {
        if a >= c {
            lower = lower.max(g);
        } else if a <= 0.0 {
            upper = upper.min(g);
        } else {
            sum += g;
            free += 1;
        }
    }
    if free > 0 {
        sum / free as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else {
        upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_problem_spreads_mass() {
        // min ½|a|² on the simplex -> uniform
        let q = Matrix::identity(4);
        let sol = solve_capped_simplex_qp(&q, &[0.0; 4], 1.0, &SolverParams::default()).unwrap();
        for a in &sol.alpha {
            assert!((a - 0.25).abs() < 1e-6);
        }
        assert!(sol.kkt_residual <= 1e-6);
    }

    #[test]
    fn infeasible_box() {
        let q = Matrix::identity(4);
        assert!(matches!(
            solve_capped_simplex_qp(&q, &[0.0; 4], 0.2, &SolverParams::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn box_meets_simplex_at_a_point() {
        for n in [3usize, 7, 49, 100] {
            let c = 1.0 / n as f64;
            let q = Matrix::identity(n);
            let p: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let sol = solve_capped_simplex_qp(&q, &p, c, &SolverParams::default()).unwrap();
            assert!(sol.alpha.iter().all(|&a| a == c));
        }
    }

    #[test]
    fn iteration_cap() {
        let q = Matrix::identity(50);
        let params = SolverParams {
            tol: 1e-12,
            max_iter: 3,
        };
        assert!(matches!(
            solve_capped_simplex_qp(&q, &[0.0; 50], 1.0, &params),
            Err(Error::Convergence { .. })
        ));
    }
}
