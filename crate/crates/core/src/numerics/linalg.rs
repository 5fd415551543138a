use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::{math, Error, Result};

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`.
///
/// Only the lower triangle of `a` is read.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape {
            op: "cholesky",
            expected: (n, n),
            found: a.shape(),
        });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if !(diag > 0.0) {
            return Err(Error::Numerical(alloc::format!(
                "matrix is not positive definite (pivot {j} = {diag:e})"
            )));
        }
        let ljj = math::sqrt(diag);
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::Shape {
            op: "solve_spd",
            expected: (a.rows(), 1),
            found: (b.len(), 1),
        });
    }
    let l = cholesky(a)?;
    let n = b.len();
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    // back: Lᵀ x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigen-decomposition for small symmetric matrices.
///
/// Eigenvector signs are normalized so the largest-magnitude component of
/// each vector is positive.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape {
            op: "symmetric_eigen",
            expected: (n, n),
            found: a.shape(),
        });
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.as_slice().iter().map(|x| x * x).sum::<f64>();
    const MAX_SWEEPS: usize = 100;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        if off <= 1e-30 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigen-decomposition did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut big = 0.0f64;
        for k in 0..n {
            let x = v.get(k, src);
            if x.abs() > big.abs() {
                big = x;
            }
        }
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors.set(k, dst, sign * v.get(k, src));
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let x = solve_spd(&Matrix::identity(3), &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve_by_hand() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let x = solve_spd(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14, "{x:?}");
    }

    #[test]
    fn indefinite_rejected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(solve_spd(&a, &[1.0, 1.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn residual_small_on_dense_spd() {
        let b = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]).unwrap();
        let rhs = [1.0, 2.0, 3.0];
        let x = solve_spd(&b, &rhs).unwrap();
        let ax = b.matvec(&x).unwrap();
        for (l, r) in ax.iter().zip(rhs) {
            assert!((l - r).abs() <= 1e-8 * 3.0);
        }
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let v0 = [e.vectors.get(0, 0), e.vectors.get(1, 0)];
        assert!((v0[0] - v0[1]).abs() < 1e-12);
        // A V = V diag(values)
        let av = a.matmul(&e.vectors).unwrap();
        for c in 0..2 {
            for r in 0..2 {
                assert!((av.get(r, c) - e.values[c] * e.vectors.get(r, c)).abs() < 1e-12);
            }
        }
    }
}
