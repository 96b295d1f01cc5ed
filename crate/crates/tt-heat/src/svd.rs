//! Small dense SVD built on one-sided Jacobi rotations.
//!
//! The truncation decisions in TT construction and rounding need singular
//! values that stay reliable on nearly rank-deficient matrices, where
//! bidiagonalization-based solvers can drift. One-sided Jacobi
//! orthogonalizes the columns of `A` in place, so every surviving column
//! norm is a singular value computed to high relative accuracy, and the
//! method is unconditionally convergent. The matrices here are small
//! (unfoldings and core matricizations), so the extra sweeps are cheap.

use nalgebra::DMatrix;

/// Thin SVD `A = U * diag(sigma) * V^T` with `sigma` sorted descending.
pub struct Svd {
    /// `m x p` with orthonormal columns, `p = min(m, n)`.
    pub u: DMatrix<f64>,
    /// Length `p`, nonnegative, descending.
    pub sigma: Vec<f64>,
    /// `p x n` with orthonormal rows.
    pub vt: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi on the thinner orientation of `a`.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m >= n {
        let (u, sigma, v) = jacobi_tall(a.clone());
        Svd {
            u,
            sigma,
            vt: v.transpose(),
        }
    } else {
        // A = (A^T)^T = (U' S V'^T)^T = V' S U'^T
        let (u2, sigma, v2) = jacobi_tall(a.transpose());
        Svd {
            u: v2,
            sigma,
            vt: u2.transpose(),
        }
    }
}

/// Jacobi on a tall (or square) matrix; returns `(U: m x n, sigma, V: n x n)`.
fn jacobi_tall(mut a: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = 1e-15_f64;

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for r in 0..m {
                    let x = a[(r, p)];
                    let y = a[(r, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = a[(r, p)];
                    let y = a[(r, q)];
                    a[(r, p)] = c * x - s * y;
                    a[(r, q)] = s * x + c * y;
                }
                for r in 0..n {
                    let x = v[(r, p)];
                    let y = v[(r, q)];
                    v[(r, p)] = c * x - s * y;
                    v[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vs = DMatrix::<f64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            for r in 0..m {
                u[(r, dst)] = a[(r, src)] / s;
            }
        }
        for r in 0..n {
            vs[(r, dst)] = v[(r, src)];
        }
    }
    (u, sigma, vs)
}
