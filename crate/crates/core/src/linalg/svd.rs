use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm2, Matrix};
use crate::linalg::qr::householder_qr;

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 30;

/// Largest relative off-diagonal Gram entry `|wᵢᵀwⱼ| / (‖wᵢ‖‖wⱼ‖)` accepted
/// as converged.
pub const JACOBI_TOL: f64 = 1e-14;

/// Thin SVD `A = U diag(sigma) Vᵀ` with `k = min(m, n)` singular triplets in
/// nonincreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_min(&self) -> f64 {
        *self.sigma.last().expect("at least one singular value")
    }

    pub fn reconstruct(&self) -> Matrix {
        let us = self.u.scale_cols(&self.sigma);
        &us * &self.v.transpose()
    }
}

impl Matrix {
    /// `self · diag(scales)`.
    pub fn scale_cols(&self, scales: &[f64]) -> Matrix {
        assert_eq!(scales.len(), self.cols(), "scale_cols: length mismatch");
        Matrix::from_fn(self.rows(), self.cols(), |i, j| self[(i, j)] * scales[j])
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi.
///
/// Tall inputs are first reduced with Householder QR so the rotations only
/// ever act on an n×n triangle; wide inputs are handled through the
/// transpose.
pub fn jacobi_svd(a: &Matrix) -> Result<Svd> {
    a.check_finite()?;
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    if m == n {
        return jacobi_square(a);
    }
    let qr = householder_qr(a)?;
    let inner = jacobi_square(&qr.r)?;
    Ok(Svd {
        u: &qr.q * &inner.u,
        sigma: inner.sigma,
        v: inner.v,
    })
}

/// Singular values only.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(jacobi_svd(a)?.sigma)
}

fn jacobi_square(a: &Matrix) -> Result<Svd> {
    let n = a.cols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n);

    let mut converged = n == 1;
    let mut off = 0.0;
    for _ in 0..MAX_SWEEPS {
        off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(w.col(p), w.col(q));
                let cosine = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off = off.max(cosine);
                if cosine <= JACOBI_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if off <= JACOBI_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off,
        });
    }

    let norms: Vec<f64> = (0..n).map(|j| norm2(w.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = Matrix::zeros(n, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.col_mut(dst).copy_from_slice(v.col(src));
        if norms[src] > 0.0 {
            let s = norms[src];
            for (o, x) in u.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = x / s;
            }
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, &missing);

    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.rows() {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Fills the listed (zero) columns with unit vectors orthogonal to all the
/// others, by Gram-Schmidt against the canonical basis.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    let n = u.rows();
    let mut candidate = 0;
    for &dst in missing {
        while candidate < n {
            let mut x = vec![0.0; n];
            x[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.cols() {
                    if j == dst {
                        continue;
                    }
                    let h = dot(u.col(j), &x);
                    for (xi, uj) in x.iter_mut().zip(u.col(j)) {
                        *xi -= h * uj;
                    }
                }
            }
            let nx = norm2(&x);
            if nx > 0.5 {
                for (o, xi) in u.col_mut(dst).iter_mut().zip(&x) {
                    *o = xi / nx;
                }
                break;
            }
        }
    }
}
