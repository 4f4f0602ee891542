use alloc::vec::Vec;

use super::matrix::{dot, Matrix, OrthogonalMatrix};
use crate::error::{Error, Result};

/// Householder QR of a tall matrix, kept in factored form.
struct HouseholderQr {
    /// Upper triangle holds `R`; reflectors are kept separately.
    r: Matrix,
    reflectors: Vec<Vec<f64>>,
}

impl HouseholderQr {
    fn new(a: &Matrix) -> Self {
        let (rows, cols) = a.shape();
        assert!(rows >= cols, "QR needs rows >= cols");
        let mut r = a.clone();
        let mut reflectors = Vec::with_capacity(cols);
        for k in 0..cols {
            let mut v: Vec<f64> = (k..rows).map(|i| r[(i, k)]).collect();
            let norm = libm::sqrt(dot(&v, &v));
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = libm::sqrt(dot(&v, &v));
            v.iter_mut().for_each(|x| *x /= vnorm);
            apply_reflector(&mut r, &v, k, k);
            reflectors.push(v);
        }
        Self { r, reflectors }
    }

    /// Overwrites `b` with `Qᵀ b`.
    fn apply_qt(&self, b: &mut Matrix) {
        for (k, v) in self.reflectors.iter().enumerate() {
            if !v.is_empty() {
                apply_reflector(b, v, k, 0);
            }
        }
    }

    fn diag(&self) -> Vec<f64> {
        (0..self.r.ncols()).map(|k| self.r[(k, k)]).collect()
    }
}

/// `M[k.., c0..] ← (I − 2vvᵀ) M[k.., c0..]`.
fn apply_reflector(m: &mut Matrix, v: &[f64], k: usize, c0: usize) {
    let cols = m.ncols();
    for j in c0..cols {
        let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * m[(k + i, j)]).sum();
        if s != 0.0 {
            for (i, vi) in v.iter().enumerate() {
                m[(k + i, j)] -= 2.0 * s * vi;
            }
        }
    }
}

/// Least-squares solution `X = argmin ‖A X − B‖_F`, algebraically equal to
/// `(AᵀA)⁻¹ AᵀB`, computed through a Householder QR of `A`.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let (rows, cols) = a.shape();
    b.check_shape("least_squares right-hand side", rows, b.ncols())?;
    if rows < cols {
        return Err(Error::SingularDesign);
    }
    let qr = HouseholderQr::new(a);
    let diag = qr.diag();
    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let tol = max_diag * rows as f64 * f64::EPSILON;
    if max_diag == 0.0 || diag.iter().any(|d| d.abs() <= tol) {
        return Err(Error::SingularDesign);
    }

    let mut qtb = b.clone();
    qr.apply_qt(&mut qtb);
    let nrhs = b.ncols();
    let mut x = Matrix::zeros(cols, nrhs);
    for j in 0..nrhs {
        for i in (0..cols).rev() {
            let mut s = qtb[(i, j)];
            for k in (i + 1)..cols {
                s -= qr.r[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / qr.r[(i, i)];
        }
    }
    Ok(x)
}

/// Orthonormal basis of the column space of a full-rank tall matrix, with the
/// implied `R` factor having a positive diagonal.
pub fn orthonormal_columns(a: &Matrix) -> Result<Matrix> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::SingularDesign);
    }
    let qr = HouseholderQr::new(a);
    let diag = qr.diag();
    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max_diag == 0.0 || diag.iter().any(|d| d.abs() <= max_diag * 1e-12) {
        return Err(Error::SingularDesign);
    }
    // Q = H_0 ⋯ H_{c−1} [I; 0]; apply reflectors in reverse order.
    let mut q = Matrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 });
    for (k, v) in qr.reflectors.iter().enumerate().rev() {
        if !v.is_empty() {
            apply_reflector(&mut q, v, k, 0);
        }
    }
    for (j, d) in diag.iter().enumerate() {
        if *d < 0.0 {
            for i in 0..rows {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Haar-distributed orthogonal matrix from a square matrix of independent
/// standard normal entries.
pub fn orthogonal_from_gaussian(g: &Matrix) -> Result<OrthogonalMatrix> {
    let n = g.nrows();
    g.check_shape("orthogonal_from_gaussian", n, n)?;
    Ok(OrthogonalMatrix::from_matrix_unchecked(
        orthonormal_columns(g)?,
    ))
}
