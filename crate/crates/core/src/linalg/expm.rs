use super::matrix::{Matrix, OrthogonalMatrix};
use super::svd::SvdFactors;
use crate::error::{Error, Result};

/// Closed-form `exp(Δ)` for the block-antisymmetric
/// `Δ = [[0, −V diag(σ) Wᵀ], [W diag(σ) Vᵀ, 0]]`, where `(W, σ, V)` is a
/// thin SVD of a `(p−d) × d` matrix.
///
/// With `s = sin σ` and `k = 2 sin²(σ/2) = 1 − cos σ` taken componentwise:
///
/// ```text
/// exp(Δ) = [[ I_d − V diag(k) Vᵀ,  −V diag(s) Wᵀ       ],
///           [ W diag(s) Vᵀ,         I_{p−d} − W diag(k) Wᵀ ]]
/// ```
///
/// The half-angle form of the diagonal blocks avoids cancellation for small σ.
pub fn structured_exp(f: &SvdFactors, d: usize, p: usize) -> Result<OrthogonalMatrix> {
    if d == 0 || d >= p {
        return Err(Error::DimensionMismatch {
            what: "structured_exp (d, p)",
            expected: (1, p.saturating_sub(1)),
            found: (d, p),
        });
    }
    let m = d.min(p - d);
    f.right.check_shape("structured_exp right factor", d, m)?;
    f.left.check_shape("structured_exp left factor", p - d, m)?;
    if f.singulars.len() != m {
        return Err(Error::DimensionMismatch {
            what: "structured_exp singular values",
            expected: (m, 1),
            found: (f.singulars.len(), 1),
        });
    }

    let sines: alloc::vec::Vec<f64> = f.singulars.iter().map(|&s| libm::sin(s)).collect();
    let versines: alloc::vec::Vec<f64> = f
        .singulars
        .iter()
        .map(|&s| {
            let h = libm::sin(0.5 * s);
            2.0 * h * h
        })
        .collect();

    let v = &f.right;
    let w = &f.left;
    let mut out = Matrix::identity(p);
    for k in 0..m {
        let (sk, ck) = (sines[k], versines[k]);
        if sk == 0.0 && ck == 0.0 {
            continue;
        }
        for i in 0..d {
            let vi = v[(i, k)];
            for j in 0..d {
                out[(i, j)] -= ck * vi * v[(j, k)];
            }
            for j in 0..(p - d) {
                out[(i, d + j)] -= sk * vi * w[(j, k)];
            }
        }
        for i in 0..(p - d) {
            let wi = w[(i, k)];
            for j in 0..d {
                out[(d + i, j)] += sk * wi * v[(j, k)];
            }
            for j in 0..(p - d) {
                out[(d + i, d + j)] -= ck * wi * w[(j, k)];
            }
        }
    }
    Ok(OrthogonalMatrix::from_matrix_unchecked(out))
}

/// The antisymmetric generator `[[0, −Cᵀ], [C, 0]]` for a `(p−d) × d` block `C`.
pub fn block_generator(c: &Matrix) -> Matrix {
    let (pd, d) = c.shape();
    let p = pd + d;
    let mut g = Matrix::zeros(p, p);
    for i in 0..pd {
        for j in 0..d {
            g[(d + i, j)] = c[(i, j)];
            g[(j, d + i)] = -c[(i, j)];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::orthogonality_defect;
    use crate::linalg::svd::thin_svd;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Truncated power series `Σ_{k ≤ terms} Aᵏ / k!`.
    fn series_exp(a: &Matrix, terms: usize) -> Matrix {
        let n = a.nrows();
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..=terms {
            term = term.matmul(a).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        sum
    }

    #[test]
    fn zero_sigma_is_identity() {
        let f = SvdFactors {
            left: Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
            singulars: vec![0.0, 0.0],
            right: Matrix::identity(2),
        };
        let e = structured_exp(&f, 2, 5).unwrap();
        assert_eq!(e.as_matrix(), &Matrix::identity(5));
    }

    #[test]
    fn planar_rotation() {
        let theta = 0.7;
        let f = SvdFactors {
            left: Matrix::from_rows(&[[1.0]]),
            singulars: vec![theta],
            right: Matrix::from_rows(&[[1.0]]),
        };
        let e = structured_exp(&f, 1, 2).unwrap();
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        let expected = Matrix::from_rows(&[[c, -s], [s, c]]);
        assert!(e.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn matches_power_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = Matrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
            let f = thin_svd(&c);
            let e = structured_exp(&f, 2, 6).unwrap();
            let reference = series_exp(&block_generator(&c), 40);
            assert!(e.sub(&reference).frobenius_norm() < 1e-8);
            assert!(orthogonality_defect(&e) < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let f = thin_svd(&Matrix::zeros(3, 2));
        assert!(structured_exp(&f, 2, 6).is_err());
        assert!(structured_exp(&f, 0, 5).is_err());
        assert!(structured_exp(&f, 5, 5).is_err());
    }
}
