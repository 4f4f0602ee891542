use alloc::vec::Vec;
use core::cmp::Ordering;

use super::matrix::{Matrix, OrthogonalMatrix, SymMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `M = U diag(λ) Uᵀ` of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector has its
/// largest-magnitude component positive (lowest index wins ties); within a
/// block of numerically tied eigenvalues, vectors are ordered lexicographically
/// descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomp {
    /// Columns are eigenvectors.
    pub eigenvectors: OrthogonalMatrix,
    pub eigenvalues: Vec<f64>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> Matrix {
        let u = self.eigenvectors.as_matrix();
        let scaled = Matrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * self.eigenvalues[j]);
        scaled.matmul_t(u)
    }

    /// Fails unless every eigenvalue exceeds `p · ε · λ_max`.
    pub fn require_positive_definite(&self) -> Result<()> {
        let p = self.eigenvalues.len();
        let max = self.eigenvalues.first().copied().unwrap_or(0.0);
        let min = self.eigenvalues.last().copied().unwrap_or(0.0);
        let floor = p as f64 * f64::EPSILON * max;
        if !(max > 0.0) || !(min > floor) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        Ok(())
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn spectral_decompose(m: &SymMatrix) -> SpectralDecomp {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = Matrix::identity(n);

    let scale = a.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= (f64::EPSILON * scale) * (f64::EPSILON * scale) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut col = v.column(j);
            fix_sign(&mut col);
            col
        })
        .collect();
    let order = sorted_order(&eigenvalues, &vectors);

    let mut u = Matrix::zeros(n, n);
    let mut lambda = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        u.set_column(k, &vectors[j]);
        lambda.push(eigenvalues[j]);
    }
    SpectralDecomp {
        eigenvectors: OrthogonalMatrix::from_matrix_unchecked(u),
        eigenvalues: lambda,
    }
}

/// Applies the Jacobi rotation annihilating `a[p][q]` to `a` (both sides) and
/// accumulates it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    // Kill the rounding residue on the annihilated pair and keep exact symmetry.
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Flips `v` so its largest-magnitude entry is positive (first index on ties).
/// Returns whether a flip happened.
pub(crate) fn fix_sign(v: &mut [f64]) -> bool {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

fn sorted_order(values: &[f64], vectors: &[Vec<f64>]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 64.0 * f64::EPSILON * max_abs;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end - 1]] - values[order[end]] <= tol {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| lex_cmp(&vectors[b], &vectors[a]));
        start = end;
    }
    order
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Symmetric inverse square root `U diag(λ^{-1/2}) Uᵀ` of a positive definite
/// matrix.
pub fn sym_inverse_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let decomp = spectral_decompose(m);
    decomp.require_positive_definite()?;
    let u = decomp.eigenvectors.as_matrix();
    let scaled = Matrix::from_fn(u.nrows(), u.ncols(), |i, j| {
        u[(i, j)] / libm::sqrt(decomp.eigenvalues[j])
    });
    SymMatrix::new(scaled.matmul_t(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::orthogonality_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(m).unwrap()
    }

    fn random_pd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = g.t_matmul(&g).add(&Matrix::identity(n).scale(0.1));
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn identity_decomposition() {
        let d = spectral_decompose(&SymMatrix::identity(3));
        assert_eq!(d.eigenvalues, [1.0, 1.0, 1.0]);
        assert_eq!(d.eigenvectors.as_matrix(), &Matrix::identity(3));
    }

    #[test]
    fn diagonal_decomposition() {
        let m = SymMatrix::new(Matrix::diag(&[4.0, 1.0])).unwrap();
        let d = spectral_decompose(&m);
        assert_eq!(d.eigenvalues, [4.0, 1.0]);
        assert_eq!(d.eigenvectors.as_matrix(), &Matrix::identity(2));

        let m = SymMatrix::new(Matrix::diag(&[1.0, 4.0])).unwrap();
        let d = spectral_decompose(&m);
        assert_eq!(d.eigenvalues, [4.0, 1.0]);
        assert_eq!(
            d.eigenvectors.as_matrix(),
            &Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])
        );
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..20 {
            let a = random_sym(5, seed);
            let d = spectral_decompose(&a);
            let err = d.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm();
            assert!(err < 1e-8, "seed {seed}: relative error {err}");
            assert!(orthogonality_defect(&d.eigenvectors) < 1e-10);
            assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..5 {
                let col = d.eigenvectors.column(j);
                let mut best = 0;
                for k in 0..5 {
                    if col[k].abs() > col[best].abs() {
                        best = k;
                    }
                }
                assert!(col[best] > 0.0);
            }
        }
    }

    #[test]
    fn decompose_twice_is_stable() {
        for seed in 0..10 {
            let a = random_sym(6, 100 + seed);
            let d1 = spectral_decompose(&a);
            let d2 = spectral_decompose(&SymMatrix::new(d1.reconstruct()).unwrap());
            for (x, y) in d1.eigenvalues.iter().zip(&d2.eigenvalues) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn not_positive_definite_detected() {
        let m = SymMatrix::new(Matrix::diag(&[1.0, 0.0, 2.0])).unwrap();
        assert!(matches!(
            spectral_decompose(&m).require_positive_definite(),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let m = SymMatrix::new(Matrix::diag(&[1.0, -1.0])).unwrap();
        assert!(sym_inverse_sqrt(&m).is_err());
    }

    #[test]
    fn inverse_sqrt_examples() {
        assert_eq!(
            sym_inverse_sqrt(&SymMatrix::identity(4))
                .unwrap()
                .as_matrix(),
            &Matrix::identity(4)
        );
        let m = SymMatrix::new(Matrix::diag(&[4.0, 9.0])).unwrap();
        let r = sym_inverse_sqrt(&m).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r[(0, 1)], 0.0);
    }

    #[test]
    fn inverse_sqrt_whitens() {
        for seed in 0..10 {
            let m = random_pd(6, 7 + seed);
            let b = sym_inverse_sqrt(&m).unwrap();
            let white = b.matmul(&m).matmul_t(&b);
            let err = white.sub(&Matrix::identity(6)).frobenius_norm();
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }
}
