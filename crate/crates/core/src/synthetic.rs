//! Seeded generators with a planted low-dimensional structure hidden behind
//! a mixing matrix, and a score for how well a run recovered it.
//!
//! Latent rows `s` carry the structure in their first `k` coordinates; the
//! remaining `p − k` coordinates are independent standard normal. Observed
//! rows are `x = M s`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthogonal_from_gaussian, orthonormal_columns, thin_svd, Matrix};
use crate::pipeline::PipelineResult;
use crate::scatter::DataSet;

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    /// Gaussian clusters with common isotropic spread.
    ClusterMixture {
        centers: Vec<Vec<f64>>,
        weights: Vec<f64>,
        spread: f64,
    },
    /// Uniform angle on a planar circle plus isotropic Gaussian noise.
    EmbeddedCircle {
        radius: f64,
        noise: f64,
    },
    /// Equally spaced, centered offsets along one direction, with Gaussian
    /// jitter across each plane. `weights` gives the share of every plane.
    ParallelHyperplanes {
        spacing: f64,
        jitter: f64,
        weights: Vec<f64>,
    },
    PureGaussian,
}

impl Structure {
    pub fn dim(&self) -> usize {
        match self {
            Structure::ClusterMixture { centers, .. } => centers.first().map_or(0, Vec::len),
            Structure::EmbeddedCircle { .. } => 2,
            Structure::ParallelHyperplanes { .. } => 1,
            Structure::PureGaussian => 0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Structure::ClusterMixture { .. } => "clusters",
            Structure::EmbeddedCircle { .. } => "circle",
            Structure::ParallelHyperplanes { .. } => "hyperplanes",
            Structure::PureGaussian => "gaussian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mixing {
    None,
    /// Haar-distributed orthogonal matrix.
    RandomOrthogonal,
    /// `Q₁ diag(e^{u}) Q₂` with `u ~ U(−1, 1)`; condition number at most e².
    RandomNonsingular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub structure: Structure,
    pub n: usize,
    pub p: usize,
    pub mixing: Mixing,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    Cluster(usize),
    Angle(f64),
    Plane(usize),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataSet {
    pub data: DataSet,
    pub labels: Vec<Label>,
    /// `p × k`, orthonormal; spans the structure in latent coordinates.
    pub planted_basis: Matrix,
    /// `M` with `x = M s`.
    pub mixing: Matrix,
}

impl LabeledDataSet {
    /// Image of the planted basis in observed coordinates (`M · basis`);
    /// orthonormal only when the mixing is orthogonal.
    pub fn mixed_basis(&self) -> Matrix {
        self.mixing.matmul(&self.planted_basis)
    }

    pub fn structure_dim(&self) -> usize {
        self.planted_basis.ncols()
    }
}

/// Three clusters on an equilateral triangle of side 5 in a plane of `R⁸`.
pub fn three_clusters(seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        structure: Structure::ClusterMixture {
            centers: alloc::vec![
                alloc::vec![0.0, 0.0],
                alloc::vec![5.0, 0.0],
                alloc::vec![2.5, 2.5 * libm::sqrt(3.0)],
            ],
            weights: alloc::vec![0.4, 0.35, 0.25],
            spread: 1.0,
        },
        n: 500,
        p: 8,
        mixing: Mixing::RandomOrthogonal,
        seed,
    }
}

/// Noisy circle of radius 3 in a plane of `R¹⁶`.
pub fn noisy_circle(seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        structure: Structure::EmbeddedCircle {
            radius: 3.0,
            noise: 0.2,
        },
        n: 500,
        p: 16,
        mixing: Mixing::RandomOrthogonal,
        seed,
    }
}

/// Plane shares proportional to a centered normal density with standard
/// deviation `envelope` evaluated at the plane offsets.
pub fn gaussian_plane_weights(count: usize, spacing: f64, envelope: f64) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..count)
        .map(|k| {
            let offset = (k as f64 - mid) * spacing;
            libm::exp(-offset * offset / (2.0 * envelope * envelope))
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Nine parallel hyperplanes in `R⁶`, spacing 0.8 under a normal envelope
/// of standard deviation 1.2. Whitened, the spacing is about 0.6: a
/// bandwidth of 0.5 smooths the planes into a Gaussian-looking marginal
/// while 0.1 resolves them.
pub fn parallel_planes(seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        structure: Structure::ParallelHyperplanes {
            spacing: 0.8,
            jitter: 0.05,
            weights: gaussian_plane_weights(9, 0.8, 1.2),
        },
        n: 500,
        p: 6,
        mixing: Mixing::RandomOrthogonal,
        seed,
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidSpec("weights must not be empty"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidSpec(
            "weights must be finite and non-negative",
        ));
    }
    if libm::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-9 {
        return Err(Error::InvalidSpec("weights must sum to 1"));
    }
    Ok(())
}

impl GeneratorSpec {
    pub fn structure_dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec("n must be at least 2"));
        }
        if self.p < 2 {
            return Err(Error::InvalidSpec("p must be at least 2"));
        }
        if self.structure_dim() > self.p {
            return Err(Error::InvalidSpec("structure dimension exceeds p"));
        }
        match &self.structure {
            Structure::ClusterMixture {
                centers,
                weights,
                spread,
            } => {
                let k = self.structure_dim();
                if k == 0 || centers.iter().any(|c| c.len() != k) {
                    return Err(Error::InvalidSpec(
                        "cluster centers need one common dimension",
                    ));
                }
                if centers.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("cluster centers must be finite"));
                }
                if weights.len() != centers.len() {
                    return Err(Error::InvalidSpec("one weight per cluster"));
                }
                check_weights(weights)?;
                if !(spread.is_finite() && *spread > 0.0) {
                    return Err(Error::InvalidSpec("spread must be positive"));
                }
            }
            Structure::EmbeddedCircle { radius, noise } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSpec("radius must be positive"));
                }
                if !(noise.is_finite() && *noise >= 0.0) {
                    return Err(Error::InvalidSpec("noise must be non-negative"));
                }
            }
            Structure::ParallelHyperplanes {
                spacing,
                jitter,
                weights,
            } => {
                if !(spacing.is_finite() && *spacing > 0.0) {
                    return Err(Error::InvalidSpec("spacing must be positive"));
                }
                if !(jitter.is_finite() && *jitter >= 0.0) {
                    return Err(Error::InvalidSpec("jitter must be non-negative"));
                }
                check_weights(weights)?;
            }
            Structure::PureGaussian => {}
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn mixing_matrix(kind: Mixing, p: usize, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let haar = |rng: &mut ChaCha8Rng| -> Result<Matrix> {
        let g = Matrix::from_fn(p, p, |_, _| normal(rng));
        Ok(orthogonal_from_gaussian(&g)?.into_matrix())
    };
    match kind {
        Mixing::None => Ok(Matrix::identity(p)),
        Mixing::RandomOrthogonal => haar(rng),
        Mixing::RandomNonsingular => {
            let q1 = haar(rng)?;
            let scales: Vec<f64> = (0..p)
                .map(|_| libm::exp(rng.random_range(-1.0..1.0)))
                .collect();
            let q2 = haar(rng)?;
            Ok(q1.matmul(&Matrix::diag(&scales)).matmul(&q2))
        }
    }
}

/// Draws a labeled sample. Deterministic in `spec.seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<LabeledDataSet> {
    spec.validate()?;
    let (n, p, k) = (spec.n, spec.p, spec.structure_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut latent = Matrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);

    match &spec.structure {
        Structure::ClusterMixture {
            centers,
            weights,
            spread,
        } => {
            let pick =
                WeightedIndex::new(weights).map_err(|_| Error::InvalidSpec("bad weights"))?;
            for i in 0..n {
                let c = pick.sample(&mut rng);
                for j in 0..k {
                    latent[(i, j)] = centers[c][j] + spread * normal(&mut rng);
                }
                labels.push(Label::Cluster(c));
            }
        }
        Structure::EmbeddedCircle { radius, noise } => {
            for i in 0..n {
                let theta = rng.random_range(0.0..TAU);
                latent[(i, 0)] = radius * libm::cos(theta) + noise * normal(&mut rng);
                latent[(i, 1)] = radius * libm::sin(theta) + noise * normal(&mut rng);
                labels.push(Label::Angle(theta));
            }
        }
        Structure::ParallelHyperplanes {
            spacing,
            jitter,
            weights,
        } => {
            let pick =
                WeightedIndex::new(weights).map_err(|_| Error::InvalidSpec("bad weights"))?;
            let mid = (weights.len() as f64 - 1.0) / 2.0;
            for i in 0..n {
                let plane = pick.sample(&mut rng);
                latent[(i, 0)] = (plane as f64 - mid) * spacing + jitter * normal(&mut rng);
                labels.push(Label::Plane(plane));
            }
        }
        Structure::PureGaussian => labels.resize(n, Label::None),
    }
    for i in 0..n {
        for j in k..p {
            latent[(i, j)] = normal(&mut rng);
        }
    }

    let mixing = mixing_matrix(spec.mixing, p, &mut rng)?;
    let rows = latent.matmul_t(&mixing);
    let planted_basis = Matrix::from_fn(p, k, |i, j| if i == j { 1.0 } else { 0.0 });
    Ok(LabeledDataSet {
        data: DataSet::new(rows)?,
        labels,
        planted_basis,
        mixing,
    })
}

/// `cos²` of the largest principal angle between `span(found)` and
/// `span(planted)`, comparing `min(d, k)` directions. Both are `p × ·`.
/// Returns 0 when either side is empty or rank deficient.
pub fn subspace_score(found: &Matrix, planted: &Matrix) -> f64 {
    if found.ncols() == 0 || planted.ncols() == 0 {
        return 0.0;
    }
    let (Ok(qf), Ok(qp)) = (orthonormal_columns(found), orthonormal_columns(planted)) else {
        return 0.0;
    };
    let cosines = thin_svd(&qf.t_matmul(&qp)).singulars;
    let m = found.ncols().min(planted.ncols());
    let c = cosines[..m].iter().copied().fold(f64::INFINITY, f64::min);
    (c * c).clamp(0.0, 1.0)
}

/// How well the first `d` coordinates of a run recover the planted
/// structure. The projection functionals `B[:, :d]` act on observed rows;
/// pulled back through the mixing they become `Mᵀ B[:, :d]` on latent rows,
/// which is compared with the planted basis.
pub fn recovery_score(result: &PipelineResult, truth: &LabeledDataSet, d: usize) -> f64 {
    projection_score(
        &result.projection_matrix(d),
        &truth.mixing,
        &truth.planted_basis,
    )
}

/// [`recovery_score`] from its ingredients: a `p × d` projection acting on
/// observed rows, the mixing `M`, and the planted latent basis.
pub fn projection_score(projection: &Matrix, mixing: &Matrix, planted_basis: &Matrix) -> f64 {
    subspace_score(&mixing.t_matmul(projection), planted_basis)
}
