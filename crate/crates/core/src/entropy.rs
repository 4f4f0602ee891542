//! Kernel estimate of differential entropy and its gradient with respect to
//! rotations of the data.
//!
//! For projected points `y₁, …, yₙ ∈ R^d` and a Gaussian kernel of bandwidth
//! `h`,
//!
//! ```text
//! ĝ(y) = n⁻¹ Σⱼ φ_h(y − yⱼ),      Ĥ = −n⁻¹ Σᵢ log ĝ(yᵢ).
//! ```
//!
//! The inner sum keeps the `j = i` term. Its exponent is zero, the largest
//! possible, so the unnormalized sums `Sᵢ = Σⱼ exp(−‖yᵢ − yⱼ‖² / 2h²)` are
//! always `≥ 1` and `log Sᵢ` needs no further max-shift to stay finite.
//!
//! Splitting each observation `x = (y, z)` into its first `d` and remaining
//! `p − d` coordinates, a rotation `exp(Δ)` with off-diagonal block `C`
//! changes `Ĥ` to first order by `⟨C, Ĉ⟩`, where
//!
//! ```text
//! Ĉ = n⁻¹ h⁻² Σᵢ [Σⱼ φ_h(yᵢ − yⱼ)(zᵢ − zⱼ)(yᵢ − yⱼ)ᵀ] / [Σⱼ φ_h(yᵢ − yⱼ)]
//! ```
//!
//! is the `(p − d) × d` [`GradientMatrix`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;

/// Kernel terms with exponent below `−KERNEL_CUTOFF` are dropped. Each
/// dropped term is below 2e-22 while every kernel sum is at least 1.
const KERNEL_CUTOFF: f64 = 50.0;

pub const DEFAULT_BANDWIDTH: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyConfig {
    bandwidth: f64,
}

impl EntropyConfig {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidConfig("bandwidth must be finite and > 0"));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }
}

/// `(p − d) × d` first-order change of the index under rotations mixing the
/// projected and the discarded coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientMatrix(Matrix);

impl GradientMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidConfig(
                "gradient matrix has non-finite entries",
            ));
        }
        Ok(Self(m))
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.frobenius_norm_sq()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for GradientMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// An orthogonally invariant projection-pursuit index on `n` points in `R^d`.
///
/// Implementations must satisfy `value(Vy₁, …, Vyₙ) = value(y₁, …, yₙ)` for
/// orthogonal `V`; the local optimizer relies on it.
pub trait PpIndex {
    /// Scratch state an evaluation can leave for the gradient at the same
    /// points. Use `()` when there is nothing to share.
    type Workspace: Default;

    fn value(&self, points: &Matrix) -> f64;

    /// Row `i` is `γᵢ = ∂ value / ∂ yᵢ`.
    fn pointwise_gradients(&self, points: &Matrix) -> Result<Matrix>;

    /// Gradient matrix for observations `x` split after column `d`.
    fn gradient_matrix(&self, x: &Matrix, d: usize) -> Result<GradientMatrix> {
        pp_index_gradient(x, d, self)
    }

    /// [`PpIndex::value`], possibly keeping intermediate results in `ws`.
    fn value_in(&self, points: &Matrix, ws: &mut Self::Workspace) -> f64 {
        let _ = ws;
        self.value(points)
    }

    /// [`PpIndex::gradient_matrix`], possibly reusing what the last
    /// [`PpIndex::value_in`] call left in `ws`. Must give the same result
    /// as the plain version.
    fn gradient_matrix_in(
        &self,
        x: &Matrix,
        d: usize,
        ws: &mut Self::Workspace,
    ) -> Result<GradientMatrix> {
        let _ = ws;
        self.gradient_matrix(x, d)
    }
}

/// Estimated differential entropy as a [`PpIndex`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropyIndex {
    pub config: EntropyConfig,
}

impl EntropyIndex {
    pub fn new(config: EntropyConfig) -> Self {
        Self { config }
    }
}

/// Kernel sums and pairwise kernel values of the last evaluated points.
#[derive(Clone, Debug, Default)]
pub struct KernelWorkspace {
    points: Option<Matrix>,
    sums: Vec<f64>,
    pairs: Vec<f64>,
}

impl PpIndex for EntropyIndex {
    type Workspace = KernelWorkspace;

    fn value(&self, points: &Matrix) -> f64 {
        estimate_entropy(points, &self.config)
    }

    fn pointwise_gradients(&self, points: &Matrix) -> Result<Matrix> {
        entropy_pointwise_gradients(points, &self.config)
    }

    fn gradient_matrix(&self, x: &Matrix, d: usize) -> Result<GradientMatrix> {
        entropy_gradient(x, d, &self.config)
    }

    fn value_in(&self, points: &Matrix, ws: &mut KernelWorkspace) -> f64 {
        ws.sums = kernel_sums(points, self.config.bandwidth, Some(&mut ws.pairs));
        ws.points = Some(points.clone());
        entropy_from_sums(&ws.sums, points.ncols(), self.config.bandwidth)
    }

    fn gradient_matrix_in(
        &self,
        x: &Matrix,
        d: usize,
        ws: &mut KernelWorkspace,
    ) -> Result<GradientMatrix> {
        check_split(x, d)?;
        let y = x.columns(0, d);
        if ws.points.as_ref() != Some(&y) {
            self.value_in(&y, ws);
        }
        let gammas = gammas_from_kernels(&y, &ws.sums, &ws.pairs, self.config.bandwidth);
        GradientMatrix::new(x.columns(d, x.ncols()).t_matmul(&gammas))
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `log(h^d (2π)^{d/2})`.
fn log_normalizer(d: usize, h: f64) -> f64 {
    d as f64 * libm::log(h) + 0.5 * d as f64 * libm::log(2.0 * PI)
}

/// `ĝ_h(query)` for the sample `points` (`n × d`).
pub fn kernel_density(points: &Matrix, query: &[f64], cfg: &EntropyConfig) -> f64 {
    libm::exp(log_kernel_density(points, query, cfg))
}

/// `log ĝ_h(query)`, evaluated with a max-shifted log-sum-exp.
pub fn log_kernel_density(points: &Matrix, query: &[f64], cfg: &EntropyConfig) -> f64 {
    let (n, d) = points.shape();
    assert_eq!(query.len(), d, "query dimension");
    let scale = 0.5 / (cfg.bandwidth * cfg.bandwidth);
    let exponents: Vec<f64> = points
        .rows_iter()
        .map(|row| -scale * squared_distance(row, query))
        .collect();
    let max = exponents.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e));
    let sum: f64 = exponents.iter().map(|&e| libm::exp(e - max)).sum();
    max + libm::log(sum) - libm::log(n as f64) - log_normalizer(d, cfg.bandwidth)
}

/// Kernel sums `Sᵢ = Σⱼ exp(−‖yᵢ − yⱼ‖² / 2h²)` (self term included), and
/// optionally the off-diagonal kernel values in pair order `(0,1), (0,2), …`.
fn kernel_sums(points: &Matrix, h: f64, pairs: Option<&mut Vec<f64>>) -> Vec<f64> {
    let (n, d) = points.shape();
    let scale = 0.5 / (h * h);
    let y = points.as_slice();
    match (d, pairs) {
        (1, None) => kernel_pass::<false>(y, n, 1, scale, &mut []),
        (2, None) => kernel_pass::<false>(y, n, 2, scale, &mut []),
        (_, None) => kernel_pass::<false>(y, n, d, scale, &mut []),
        (_, Some(out)) => {
            out.clear();
            out.resize(n * n.saturating_sub(1) / 2, 0.0);
            match d {
                1 => kernel_pass::<true>(y, n, 1, scale, out),
                2 => kernel_pass::<true>(y, n, 2, scale, out),
                _ => kernel_pass::<true>(y, n, d, scale, out),
            }
        }
    }
}

// Inlined so that the small fixed `d` of each call site is a constant.
#[inline(always)]
fn kernel_pass<const KEEP: bool>(
    y: &[f64],
    n: usize,
    d: usize,
    scale: f64,
    pairs: &mut [f64],
) -> Vec<f64> {
    let mut sums = vec![1.0; n];
    let mut offset = 0;
    for i in 0..n {
        let yi = &y[i * d..(i + 1) * d];
        let rest = &y[(i + 1) * d..];
        let (head, tail) = sums.split_at_mut(i + 1);
        let mut acc = 0.0;
        let mut slot = offset;
        for (yj, sj) in rest.chunks_exact(d).zip(tail.iter_mut()) {
            let e = scale * squared_distance(yi, yj);
            let k = if e > KERNEL_CUTOFF {
                0.0
            } else {
                math::exp(-e)
            };
            acc += k;
            *sj += k;
            if KEEP {
                pairs[slot] = k;
                slot += 1;
            }
        }
        head[i] += acc;
        offset += n - i - 1;
    }
    sums
}

/// `Ĥ(y₁, …, yₙ) = −n⁻¹ Σᵢ log ĝ_h(yᵢ)` for `points` of shape `n × d`.
pub fn estimate_entropy(points: &Matrix, cfg: &EntropyConfig) -> f64 {
    let (n, d) = points.shape();
    assert!(n >= 1, "entropy of an empty sample");
    let sums = kernel_sums(points, cfg.bandwidth, None);
    entropy_from_sums(&sums, d, cfg.bandwidth)
}

fn entropy_from_sums(sums: &[f64], d: usize, h: f64) -> f64 {
    let n = sums.len();
    let mean_log: f64 = sums.iter().map(|&s| libm::log(s)).sum::<f64>() / n as f64;
    -mean_log + libm::log(n as f64) + log_normalizer(d, h)
}

/// Expected value of the estimator under `N(0, I_d)`:
/// `(d/2)((1 + h²)⁻¹ + log(1 + h²) + log 2π)`.
pub fn gaussian_reference_entropy(d: usize, cfg: &EntropyConfig) -> f64 {
    let s = 1.0 + cfg.bandwidth * cfg.bandwidth;
    0.5 * d as f64 * (1.0 / s + libm::log(s) + libm::log(2.0 * PI))
}

fn check_split(x: &Matrix, d: usize) -> Result<()> {
    let (n, p) = x.shape();
    if d == 0 || d >= p {
        return Err(Error::DimensionMismatch {
            what: "gradient split (d must satisfy 1 <= d < p)",
            expected: (n, d + 1),
            found: (n, p),
        });
    }
    if n < 2 {
        return Err(Error::TooFewObservations { n, p });
    }
    Ok(())
}

/// The entropy gradient matrix `Ĉ` for observations `x` (`n × p`), with
/// `yᵢ` the first `d` coordinates and `zᵢ` the rest.
///
/// Evaluated as `Σᵢ zᵢ γᵢᵀ`, which costs `O(n²d + npd)` instead of the
/// `O(n²pd)` of the pairwise double sum.
pub fn entropy_gradient(x: &Matrix, d: usize, cfg: &EntropyConfig) -> Result<GradientMatrix> {
    check_split(x, d)?;
    let p = x.ncols();
    let gammas = entropy_pointwise_gradients(&x.columns(0, d), cfg)?;
    GradientMatrix::new(x.columns(d, p).t_matmul(&gammas))
}

/// `γ_k = ∂Ĥ/∂y_k = n⁻¹ h⁻² Σⱼ φ_h(y_k − yⱼ)(1/S_k + 1/Sⱼ)(y_k − yⱼ)`, up
/// to the common kernel constant which cancels.
fn entropy_pointwise_gradients(points: &Matrix, cfg: &EntropyConfig) -> Result<Matrix> {
    let mut pair_kernels = Vec::new();
    let sums = kernel_sums(points, cfg.bandwidth, Some(&mut pair_kernels));
    Ok(gammas_from_kernels(
        points,
        &sums,
        &pair_kernels,
        cfg.bandwidth,
    ))
}

fn gammas_from_kernels(points: &Matrix, sums: &[f64], pairs: &[f64], h: f64) -> Matrix {
    let (n, d) = points.shape();
    let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    let y = points.as_slice();
    let g = match d {
        1 => gradient_pass(y, n, 1, &inv, pairs),
        2 => gradient_pass(y, n, 2, &inv, pairs),
        _ => gradient_pass(y, n, d, &inv, pairs),
    };
    Matrix::from_row_major(n, d, g).scale(1.0 / (n as f64 * h * h))
}

#[inline(always)]
fn gradient_pass(y: &[f64], n: usize, d: usize, inv: &[f64], pairs: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; n * d];
    let mut gi = vec![0.0; d];
    let mut offset = 0;
    for i in 0..n {
        let len = n - i - 1;
        let yi = &y[i * d..(i + 1) * d];
        let (head, tail) = g.split_at_mut((i + 1) * d);
        gi.iter_mut().for_each(|v| *v = 0.0);
        let rows = y[(i + 1) * d..]
            .chunks_exact(d)
            .zip(tail.chunks_exact_mut(d))
            .zip(&inv[i + 1..])
            .zip(&pairs[offset..offset + len]);
        for (((yj, gj), inv_j), &k) in rows {
            if k == 0.0 {
                continue;
            }
            let w = k * (inv[i] + inv_j);
            for b in 0..d {
                let diff = w * (yi[b] - yj[b]);
                gi[b] += diff;
                gj[b] -= diff;
            }
        }
        for (slot, v) in head[i * d..].iter_mut().zip(&gi) {
            *slot += v;
        }
        offset += len;
    }
    g
}

/// `Ĉ = Σᵢ zᵢ γᵢᵀ` for any orthogonally invariant index.
pub fn pp_index_gradient<I: PpIndex + ?Sized>(
    x: &Matrix,
    d: usize,
    idx: &I,
) -> Result<GradientMatrix> {
    check_split(x, d)?;
    let p = x.ncols();
    let y = x.columns(0, d);
    let z = x.columns(d, p);
    let gammas = idx.pointwise_gradients(&y)?;
    gammas.check_shape("pointwise gradients", x.nrows(), d)?;
    GradientMatrix::new(z.t_matmul(&gammas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        block_generator, frobenius_inner, orthogonal_from_gaussian, structured_exp, thin_svd,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn cfg(h: f64) -> EntropyConfig {
        EntropyConfig::new(h).unwrap()
    }

    /// Entropy by the textbook double loop with explicit normalizing constants.
    fn entropy_oracle(y: &Matrix, h: f64) -> f64 {
        let (n, d) = y.shape();
        let norm = libm::pow(h, d as f64) * libm::pow(2.0 * PI, 0.5 * d as f64);
        let mut total = 0.0;
        for i in 0..n {
            let mut g = 0.0;
            for j in 0..n {
                let r2 = squared_distance(y.row(i), y.row(j));
                g += libm::exp(-r2 / (2.0 * h * h)) / norm;
            }
            total += libm::log(g / n as f64);
        }
        -total / n as f64
    }

    #[test]
    fn kernel_at_own_center() {
        let y = Matrix::from_rows(&[[0.3]]);
        let g = kernel_density(&y, &[0.3], &cfg(1.0));
        assert!((g - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn kernel_symmetric_pair() {
        let a = [0.4, -0.2];
        let y = Matrix::from_rows(&[a, [-a[0], -a[1]]]);
        let h: f64 = 0.7;
        let expected = libm::exp(-(0.16 + 0.04) / (2.0 * h * h)) / (h * h * 2.0 * PI);
        let g = kernel_density(&y, &[0.0, 0.0], &cfg(h));
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_direct_sum() {
        let y = gaussian(20, 2, 1);
        let q = [0.25, -0.5];
        let h = 0.5;
        let direct: f64 = y
            .rows_iter()
            .map(|r| libm::exp(-squared_distance(r, &q) / (2.0 * h * h)) / (2.0 * PI * h * h))
            .sum::<f64>()
            / 20.0;
        assert!((kernel_density(&y, &q, &cfg(h)) - direct).abs() < 1e-14);
    }

    #[test]
    fn single_point_entropy() {
        let y = Matrix::from_rows(&[[1.0, 2.0]]);
        let value = estimate_entropy(&y, &cfg(0.5));
        let expected = 2.0 * libm::log(0.5) + libm::log(2.0 * PI);
        assert!((value - expected).abs() < 1e-14);
        assert!((value - 0.4516).abs() < 1e-4);
    }

    #[test]
    fn entropy_matches_oracle() {
        for (seed, h) in [(2, 0.5), (3, 0.3), (4, 0.1)] {
            let y = gaussian(50, 2, seed);
            let a = estimate_entropy(&y, &cfg(h));
            let b = entropy_oracle(&y, h);
            assert!((a - b).abs() < 1e-12, "h = {h}: {a} vs {b}");
        }
    }

    #[test]
    fn entropy_translation_and_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5 {
            let y = gaussian(40, 2, 10 + seed);
            let base = estimate_entropy(&y, &cfg(0.5));
            let shift = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let moved = Matrix::from_fn(40, 2, |i, j| y[(i, j)] + shift[j]);
            assert!((estimate_entropy(&moved, &cfg(0.5)) - base).abs() < 1e-12);
            let v = orthogonal_from_gaussian(&gaussian(2, 2, 100 + seed)).unwrap();
            let rotated = y.matmul_t(&v);
            assert!((estimate_entropy(&rotated, &cfg(0.5)) - base).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_values() {
        let r = gaussian_reference_entropy(2, &cfg(0.5));
        assert!((r - 2.8610).abs() < 5e-5, "{r}");
        let r = gaussian_reference_entropy(1, &cfg(1e-9));
        assert!((r - 0.5 * (1.0 + libm::log(2.0 * PI))).abs() < 1e-12);
        assert!((r - 1.41894).abs() < 1e-5);
    }

    #[test]
    fn reference_matches_monte_carlo() {
        // −E log φ_s(Y) for Y ~ N(0, I₃), s² = 1 + h², evaluated directly.
        let h: f64 = 0.4;
        let s2 = 1.0 + h * h;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..m {
            let mut r2 = 0.0;
            for _ in 0..3 {
                let v: f64 = rng.sample(StandardNormal);
                r2 += v * v;
            }
            let val = 1.5 * libm::log(2.0 * PI * s2) + r2 / (2.0 * s2);
            sum += val;
            sum_sq += val * val;
        }
        let mean = sum / m as f64;
        let se = libm::sqrt((sum_sq / m as f64 - mean * mean) / m as f64);
        let r = gaussian_reference_entropy(3, &cfg(h));
        assert!((mean - r).abs() < 3.0 * se, "mc {mean} ± {se}, formula {r}");
    }

    #[test]
    fn zero_gradient_cases() {
        let mut x = gaussian(15, 4, 6);
        for i in 0..15 {
            x[(i, 2)] = 1.0;
            x[(i, 3)] = -2.0;
        }
        // Σᵢ γᵢ vanishes, so Ĉ = z Σᵢ γᵢᵀ is zero up to rounding.
        assert!(entropy_gradient(&x, 2, &cfg(0.5)).unwrap().norm_sq() < 1e-24);

        let mut x = gaussian(15, 4, 7);
        for i in 0..15 {
            x[(i, 0)] = 0.5;
            x[(i, 1)] = 0.5;
        }
        assert_eq!(entropy_gradient(&x, 2, &cfg(0.5)).unwrap().norm_sq(), 0.0);
    }

    #[test]
    fn gradient_rejects_bad_split() {
        let x = gaussian(10, 3, 8);
        assert!(entropy_gradient(&x, 0, &cfg(0.5)).is_err());
        assert!(entropy_gradient(&x, 3, &cfg(0.5)).is_err());
    }

    /// `Ĥ(Πᵀ exp(A)ᵀ xᵢ)` with `A` a general antisymmetric generator.
    fn rotated_entropy(x: &Matrix, d: usize, a: &Matrix, h: f64) -> f64 {
        // Power series: fine for the tiny generators used in finite differences.
        let p = a.nrows();
        let mut e = Matrix::identity(p);
        let mut term = Matrix::identity(p);
        for k in 1..30 {
            term = term.matmul(a).scale(1.0 / k as f64);
            e = e.add(&term);
        }
        // Rows: xᵢᵀ exp(A), i.e. (exp(A)ᵀ xᵢ)ᵀ.
        let moved = x.matmul(&e);
        estimate_entropy(&moved.columns(0, d), &cfg(h))
    }

    #[test]
    fn directional_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (n, p, d, h) = (20, 4, 2, 0.5);
        let x = gaussian(n, p, 22);
        let c_hat = entropy_gradient(&x, d, &cfg(h)).unwrap();
        for _ in 0..10 {
            // Random antisymmetric direction with all blocks populated.
            let raw = Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
            let a = raw.sub(&raw.transpose()).scale(0.5);
            let c_block = Matrix::from_fn(p - d, d, |i, j| a[(d + i, j)]);
            let predicted = frobenius_inner(&c_block, &c_hat);
            let eps = 1e-5;
            let fd = (rotated_entropy(&x, d, &a.scale(eps), h)
                - rotated_entropy(&x, d, &a.scale(-eps), h))
                / (2.0 * eps);
            let rel = (fd - predicted).abs() / predicted.abs().max(1e-12);
            assert!(rel < 1e-5, "fd {fd} vs {predicted}");
        }
    }

    #[test]
    fn descent_along_structured_direction() {
        for seed in 0..5 {
            let x = gaussian(25, 5, 30 + seed);
            let d = 2;
            let c_hat = entropy_gradient(&x, d, &cfg(0.5)).unwrap();
            let norm_sq = c_hat.norm_sq();
            assert!(norm_sq > 1e-6);
            let f = thin_svd(&c_hat);
            let h_at = |t: f64| {
                let u = structured_exp(&f.scaled(t), d, 5).unwrap();
                estimate_entropy(&x.matmul_t(&u).columns(0, d), &cfg(0.5))
            };
            let eps = 1e-5;
            let deriv = (h_at(eps) - h_at(-eps)) / (2.0 * eps);
            assert!((deriv + norm_sq).abs() / norm_sq < 1e-4);
            assert!(h_at(1e-4) < h_at(0.0));
            // The generator really is the structured block matrix.
            let g = block_generator(&c_hat);
            assert!((frobenius_inner(&g, &g) - 2.0 * norm_sq).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_pairwise_double_sum() {
        // Ĉ = n⁻¹h⁻² Σ_{i<j} k_ij (1/Sᵢ + 1/Sⱼ)(zᵢ − zⱼ)(yᵢ − yⱼ)ᵀ, summed directly.
        fn pair_sum(x: &Matrix, d: usize, h: f64) -> Matrix {
            let (n, p) = x.shape();
            let k = |i: usize, j: usize| {
                let r2: f64 = (0..d).map(|b| (x[(i, b)] - x[(j, b)]).powi(2)).sum();
                libm::exp(-r2 / (2.0 * h * h))
            };
            let s: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k(i, j)).sum()).collect();
            let mut c = vec![0.0; (p - d) * d];
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = k(i, j) * (1.0 / s[i] + 1.0 / s[j]);
                    for a in 0..p - d {
                        for b in 0..d {
                            c[a * d + b] +=
                                w * (x[(i, d + a)] - x[(j, d + a)]) * (x[(i, b)] - x[(j, b)]);
                        }
                    }
                }
            }
            Matrix::from_row_major(p - d, d, c).scale(1.0 / (n as f64 * h * h))
        }
        for (seed, d) in [(40, 1), (41, 2), (42, 3)] {
            let x = gaussian(30, 5, seed);
            let idx = EntropyIndex::new(cfg(0.4));
            let fast = entropy_gradient(&x, d, &idx.config).unwrap();
            assert!(fast.sub(&pair_sum(&x, d, 0.4)).max_abs() < 1e-10);
            let generic = pp_index_gradient(&x, d, &idx).unwrap();
            assert!(fast.sub(&generic).max_abs() < 1e-10);
        }
    }

    #[test]
    fn generic_path_outer_product() {
        struct Fixed(Matrix);
        impl PpIndex for Fixed {
            type Workspace = ();
            fn value(&self, _: &Matrix) -> f64 {
                0.0
            }
            fn pointwise_gradients(&self, _: &Matrix) -> Result<Matrix> {
                Ok(self.0.clone())
            }
        }
        let x = Matrix::from_rows(&[[0.0, 0.0, 1.0, 0.0], [5.0, 5.0, 0.0, 0.0]]);
        let idx = Fixed(Matrix::from_rows(&[[2.0, 3.0], [0.0, 0.0]]));
        let c = pp_index_gradient(&x, 2, &idx).unwrap();
        assert_eq!(c.as_matrix(), &Matrix::from_rows(&[[2.0, 3.0], [0.0, 0.0]]));

        let zero = Fixed(Matrix::zeros(2, 2));
        assert_eq!(pp_index_gradient(&x, 2, &zero).unwrap().norm_sq(), 0.0);
    }

    #[test]
    fn pointwise_gradients_match_finite_differences() {
        let y = gaussian(12, 2, 50);
        let idx = EntropyIndex::new(cfg(0.5));
        let g = idx.pointwise_gradients(&y).unwrap();
        let eps = 1e-6;
        for i in [0, 5, 11] {
            for b in 0..2 {
                let mut plus = y.clone();
                plus[(i, b)] += eps;
                let mut minus = y.clone();
                minus[(i, b)] -= eps;
                let fd = (idx.value(&plus) - idx.value(&minus)) / (2.0 * eps);
                assert!((fd - g[(i, b)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn antisymmetric_block_is_orthogonal_to_outer_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let y = gaussian(8, 3, 61);
        let raw = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let delta1 = raw.sub(&raw.transpose());
        for i in 0..8 {
            for j in 0..8 {
                let diff: Vec<f64> = (0..3).map(|k| y[(i, k)] - y[(j, k)]).collect();
                let outer = Matrix::from_fn(3, 3, |a, b| diff[a] * diff[b]);
                assert!(frobenius_inner(&delta1, &outer).abs() < 1e-12);
            }
        }
    }
}
