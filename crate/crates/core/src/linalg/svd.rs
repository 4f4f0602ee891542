use alloc::vec::Vec;

use super::eigen::fix_sign;
use super::matrix::{dot, Matrix};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `C = W diag(σ) Vᵀ` with `m = min(rows, cols)` singular triples.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    /// `W`, rows × m, orthonormal columns.
    pub left: Matrix,
    /// `σ`, descending and nonnegative.
    pub singulars: Vec<f64>,
    /// `V`, cols × m, orthonormal columns.
    pub right: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singulars.len()
    }

    /// Same singular vectors with every singular value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            left: self.left.clone(),
            singulars: self.singulars.iter().map(|s| s * factor).collect(),
            right: self.right.clone(),
        }
    }

    pub fn reconstruct(&self) -> Matrix {
        let w = &self.left;
        let ws = Matrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * self.singulars[j]);
        ws.matmul_t(&self.right)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Singular vectors are sign-fixed on the right factor (largest-magnitude
/// entry positive) with the matching left vector flipped alongside. Columns of
/// the left factor belonging to zero singular values are completed to an
/// orthonormal set.
pub fn thin_svd(c: &Matrix) -> SvdFactors {
    let (rows, cols) = c.shape();
    if rows >= cols {
        tall_svd(c)
    } else {
        let t = tall_svd(&c.transpose());
        let mut f = SvdFactors {
            left: t.right,
            singulars: t.singulars,
            right: t.left,
        };
        canonical_signs(&mut f);
        f
    }
}

fn tall_svd(a: &Matrix) -> SvdFactors {
    let (rows, cols) = a.shape();
    // Work column-wise: u[j] is column j of A·V.
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let cs = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = cs * t;
                rotate_pair(&mut u, p, q, cs, sn);
                rotate_pair(&mut v, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = u.iter().map(|col| libm::sqrt(dot(col, col))).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let max_norm = norms.iter().fold(0.0f64, |m, &x| m.max(x));
    let floor = max_norm * rows.max(cols) as f64 * f64::EPSILON;

    let mut left: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut singulars = Vec::with_capacity(cols);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut pending = Vec::new();
    for &j in &order {
        let s = norms[j];
        singulars.push(s);
        right.push(v[j].clone());
        if s > floor && s > 0.0 {
            left.push(u[j].iter().map(|x| x / s).collect());
        } else {
            pending.push(left.len());
            left.push(Vec::new());
        }
    }
    complete_orthonormal(&mut left, &pending, rows);

    let mut f = SvdFactors {
        left: from_columns(rows, &left),
        singulars,
        right: from_columns(cols, &right),
    };
    canonical_signs(&mut f);
    f
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the empty slots listed in `pending` with unit vectors orthogonal to
/// every other column, using Gram-Schmidt on the standard basis.
fn complete_orthonormal(columns: &mut [Vec<f64>], pending: &[usize], dim: usize) {
    let mut candidate = 0;
    for &slot in pending {
        loop {
            assert!(candidate < dim, "cannot complete orthonormal basis");
            let mut e: Vec<f64> = (0..dim)
                .map(|i| if i == candidate { 1.0 } else { 0.0 })
                .collect();
            candidate += 1;
            // Two passes of Gram-Schmidt for numerical orthogonality.
            for _ in 0..2 {
                for col in columns.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(col, &e);
                    e.iter_mut().zip(col).for_each(|(x, c)| *x -= proj * c);
                }
            }
            let norm = libm::sqrt(dot(&e, &e));
            if norm > 1e-6 {
                columns[slot] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

fn from_columns(rows: usize, cols: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn canonical_signs(f: &mut SvdFactors) {
    for j in 0..f.rank() {
        let mut v = f.right.column(j);
        if fix_sign(&mut v) {
            f.right.set_column(j, &v);
            let w: Vec<f64> = f.left.column(j).iter().map(|x| -x).collect();
            f.left.set_column(j, &w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::orthogonality_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_matrix() {
        let f = thin_svd(&Matrix::zeros(3, 2));
        assert_eq!(f.singulars, [0.0, 0.0]);
        assert!(orthogonality_defect(&f.left) < 1e-12);
        assert!(orthogonality_defect(&f.right) < 1e-12);
    }

    #[test]
    fn diagonal_case() {
        let c = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let f = thin_svd(&c);
        assert_eq!(f.singulars, [2.0, 1.0]);
        assert_eq!(f.reconstruct(), c);
    }

    #[test]
    fn reordered_diagonal() {
        let c = Matrix::from_rows(&[[1.0, 0.0], [0.0, -3.0]]);
        let f = thin_svd(&c);
        assert_eq!(f.singulars, [3.0, 1.0]);
        assert!(f.reconstruct().sub(&c).max_abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction_tall_and_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(r, c) in &[(5, 2), (2, 5), (4, 4), (1, 3), (3, 1), (9, 1)] {
            for _ in 0..10 {
                let m = Matrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0));
                let f = thin_svd(&m);
                assert_eq!(f.rank(), r.min(c));
                assert!(f.reconstruct().sub(&m).frobenius_norm() < 1e-10);
                assert!(orthogonality_defect(&f.left) < 1e-10);
                assert!(orthogonality_defect(&f.right) < 1e-10);
                assert!(f.singulars.windows(2).all(|w| w[0] >= w[1]));
                assert!(f.singulars.iter().all(|&s| s >= 0.0));
            }
        }
    }

    #[test]
    fn rank_deficient_completion() {
        // Rank one 4x3 matrix.
        let m = Matrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let f = thin_svd(&m);
        assert!(f.singulars[1] < 1e-12);
        assert!(orthogonality_defect(&f.left) < 1e-10);
        assert!(f.reconstruct().sub(&m).frobenius_norm() < 1e-10);
    }
}
