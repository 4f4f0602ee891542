//! The full procedure: prewhitening, invariant coordinate selection, start
//! enumeration, local projection pursuit per start, and recovery of the
//! overall linear map.
//!
//! [`run_pipeline`] runs everything sequentially. Callers that want to spread
//! the per-start optimizations over threads use the staged API instead:
//! [`prepare`], then [`Prepared::jobs`] / [`Prepared::run_job`], then
//! [`Prepared::finish`]. Each job only reads the prepared data, so the jobs
//! can run in any order and the result does not depend on it.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entropy::{estimate_entropy, EntropyConfig};
use crate::error::{Error, Result};
use crate::linalg::{
    least_squares, orthogonal_from_gaussian, spectral_decompose, sym_inverse_sqrt, Matrix,
    OrthogonalMatrix, SpectralDecomp, SymMatrix,
};
use crate::optimizer::{
    local_pp, permutation_matrix, permutation_order, LocalPpResult, OptimizerConfig, PpTrace,
    Termination,
};
use crate::scatter::{
    center, one_step_m_scatter, sample_covariance, DataSet, ScatterConfig, Stage,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Prewhiten, rotate to invariant coordinates, then local PP.
    IcsThenPp,
    /// Prewhiten, then local PP on the prewhitened coordinates (optionally
    /// after random orthogonal pre-rotations).
    GlobalPp,
    /// Prewhiten and rotate; report the starting projections only.
    IcsOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StartPolicy {
    /// Every pair `j < k`; requires `d = 2`.
    AllPairs,
    /// The `d + 1` projections taking the first `d − k` and the last `k`
    /// coordinates, `k = 0, …, d`.
    IcsAdjacent,
    /// Score every candidate (all pairs for `d = 2`, otherwise the adjacent
    /// ones) and optimize only the one with the smallest initial entropy.
    BestInitialOnly,
    /// Caller-supplied 0-based index tuples.
    Explicit(Vec<Vec<usize>>),
}

impl StartPolicy {
    pub fn default_for(d: usize) -> Self {
        if d == 2 {
            StartPolicy::AllPairs
        } else {
            StartPolicy::IcsAdjacent
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub d: usize,
    pub scatter: ScatterConfig,
    pub optimizer: OptimizerConfig,
    pub mode: Mode,
    pub starts: StartPolicy,
    /// Extra random orthogonal pre-rotations in [`Mode::GlobalPp`].
    pub restarts: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            scatter: ScatterConfig::default(),
            optimizer: OptimizerConfig::default(),
            mode: Mode::IcsThenPp,
            starts: StartPolicy::default_for(d),
            restarts: 0,
            seed: 0,
        }
    }

    pub fn entropy(&self) -> &EntropyConfig {
        &self.optimizer.entropy
    }
}

/// Final entropies closer than this count as the same optimum.
pub const FINAL_H_TIE: f64 = 1e-9;

/// Candidate starting projections as 0-based, ascending index tuples.
pub fn enumerate_starts(p: usize, d: usize, policy: &StartPolicy) -> Result<Vec<Vec<usize>>> {
    if d == 0 || d >= p {
        return Err(Error::InvalidConfig(
            "projection dimension must satisfy 1 <= d < p",
        ));
    }
    match policy {
        StartPolicy::AllPairs => {
            if d != 2 {
                return Err(Error::InvalidConfig("all-pairs starts require d = 2"));
            }
            Ok(combinations(p, 2))
        }
        StartPolicy::IcsAdjacent => Ok((0..=d)
            .map(|k| (0..d - k).chain(p - k..p).collect())
            .collect()),
        StartPolicy::BestInitialOnly => enumerate_starts(p, d, &StartPolicy::default_for(d)),
        StartPolicy::Explicit(list) => {
            if list.is_empty() {
                return Err(Error::InvalidIndices("no explicit starts given"));
            }
            for tuple in list {
                if tuple.len() != d {
                    return Err(Error::InvalidIndices("explicit start must have d indices"));
                }
                permutation_order(p, tuple)?;
            }
            Ok(list.clone())
        }
    }
}

fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            rec(j + 1, p, k, cur, out);
            cur.pop();
        }
    }
    rec(0, p, k, &mut current, &mut out);
    out
}

/// Centers nothing; expects centered rows. Returns `x_pre = B₀⁻¹ x` with
/// `B₀` the symmetric square root of the sample covariance, plus `B₀⁻¹`.
pub fn prewhiten(centered: &DataSet) -> Result<(DataSet, SymMatrix)> {
    if centered.stage() != Stage::Centered {
        return Err(Error::StageMismatch {
            expected: Stage::Centered.name(),
            found: centered.stage().name(),
        });
    }
    let b0_inv = sym_inverse_sqrt(&sample_covariance(centered.rows()))?;
    let pre = centered.rows().matmul(&b0_inv);
    Ok((centered.with_rows(pre, Stage::Pre), b0_inv))
}

/// `x_ics = Ûᵀ x_pre` with `Û` the eigenvectors of the one-step M-scatter of
/// the prewhitened data.
pub fn ics_rotate(pre: &DataSet, cfg: &ScatterConfig) -> Result<(DataSet, SpectralDecomp)> {
    if pre.stage() != Stage::Pre {
        return Err(Error::StageMismatch {
            expected: Stage::Pre.name(),
            found: pre.stage().name(),
        });
    }
    let scatter = one_step_m_scatter(pre.rows(), cfg)?;
    let decomp = spectral_decompose(&scatter);
    decomp.require_positive_definite()?;
    let ics = pre.rows().matmul(&decomp.eigenvectors);
    Ok((pre.with_rows(ics, Stage::Ics), decomp))
}

/// `B = argmin ‖X_raw B − X_final‖`, i.e. `(X_rawᵀX_raw)⁻¹ X_rawᵀ X_final`.
pub fn recover_b(x_raw: &Matrix, x_final: &Matrix) -> Result<Matrix> {
    least_squares(x_raw, x_final)
}

/// One local PP run to perform: which pre-rotation and which coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StartJob {
    /// 0 is the unrotated working data; `s ≥ 1` the `s`-th random rotation.
    pub restart: usize,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StartOutcome {
    pub job: StartJob,
    pub initial_h: f64,
    /// `None` when the start was only scored.
    pub result: Option<LocalPpResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StartSummary {
    pub restart: usize,
    pub indices: Vec<usize>,
    pub initial_h: f64,
    pub final_h: f64,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub trace: Option<PpTrace>,
}

/// Per-stage factors. Row-vector convention: `X_final = X_centered · product`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stagewise {
    pub b0_inv: SymMatrix,
    pub ics: Option<SpectralDecomp>,
    pub pre_rotation: OrthogonalMatrix,
    /// Column order of the selected start.
    pub permutation: Vec<usize>,
    pub rotation: OrthogonalMatrix,
    pub product: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult {
    /// Optimization of the winning start; `None` in [`Mode::IcsOnly`].
    pub best: Option<LocalPpResult>,
    pub best_start: StartJob,
    /// Ordered by initial entropy ascending, ties by start.
    pub per_start: Vec<StartSummary>,
    /// Mean subtracted from the raw data.
    pub center: Vec<f64>,
    /// Final coordinates, `n × p`; the first `d` columns are the projection.
    pub final_data: Matrix,
    /// Least-squares `B` with `X_centered · B = X_final`.
    pub b: Matrix,
    pub stagewise: Stagewise,
    /// Invariant coordinates (before any start permutation), if computed.
    pub ics_coordinates: Option<Matrix>,
}

impl PipelineResult {
    pub fn final_h(&self) -> f64 {
        self.best.as_ref().map(|b| b.final_h).unwrap_or_else(|| {
            self.per_start
                .iter()
                .map(|s| s.initial_h)
                .fold(f64::INFINITY, f64::min)
        })
    }

    /// Largest entry of `|B − stagewise product|`.
    pub fn b_discrepancy(&self) -> f64 {
        self.b.sub(&self.stagewise.product).max_abs()
    }

    /// First `d` columns of `B`: the projection in centered raw coordinates.
    pub fn projection_matrix(&self, d: usize) -> Matrix {
        self.b.columns(0, d)
    }

    /// True when every optimized start stopped on a cap.
    pub fn all_capped(&self) -> bool {
        let mut runs = self
            .per_start
            .iter()
            .filter_map(|s| s.termination)
            .peekable();
        runs.peek().is_some() && runs.all(|t| t.is_cap())
    }
}

/// Stage outputs shared by all start jobs.
#[derive(Clone, Debug)]
pub struct Prepared {
    cfg: PipelineConfig,
    centered: DataSet,
    b0_inv: SymMatrix,
    ics: Option<SpectralDecomp>,
    /// `(pre-rotation, working data)` per restart.
    working: Vec<(OrthogonalMatrix, DataSet)>,
    starts: Vec<Vec<usize>>,
}

/// Centers, prewhitens, and (unless in global mode) rotates to invariant
/// coordinates.
pub fn prepare(raw: &DataSet, cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.scatter.validate()?;
    cfg.optimizer.validate()?;
    let (n, p) = raw.rows().shape();
    if n <= p {
        return Err(Error::TooFewObservations { n, p });
    }
    let starts = enumerate_starts(p, cfg.d, &cfg.starts)?;
    let centered = center(raw)?;
    let (pre, b0_inv) = prewhiten(&centered)?;

    let (base, ics) = match cfg.mode {
        Mode::GlobalPp => (pre, None),
        Mode::IcsThenPp | Mode::IcsOnly => {
            let (ics_data, decomp) = ics_rotate(&pre, &cfg.scatter)?;
            (ics_data, Some(decomp))
        }
    };

    let mut working = Vec::with_capacity(1 + cfg.restarts);
    working.push((OrthogonalMatrix::identity(p), base.clone()));
    if cfg.mode == Mode::GlobalPp && cfg.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.restarts {
            let g = Matrix::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
            let v = orthogonal_from_gaussian(&g)?;
            // Rows become V_sᵀ xᵢ.
            let rotated = base.rows().matmul(&v);
            working.push((v, base.with_rows(rotated, base.stage())));
        }
    }

    Ok(Prepared {
        cfg: cfg.clone(),
        centered,
        b0_inv,
        ics,
        working,
        starts,
    })
}

impl Prepared {
    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn centered(&self) -> &DataSet {
        &self.centered
    }

    pub fn ics(&self) -> Option<&SpectralDecomp> {
        self.ics.as_ref()
    }

    /// Data before any start permutation for restart `s`.
    pub fn working_data(&self, restart: usize) -> &DataSet {
        &self.working[restart].1
    }

    pub fn starts(&self) -> &[Vec<usize>] {
        &self.starts
    }

    /// Every (restart, start) pair, restart-major.
    pub fn jobs(&self) -> Vec<StartJob> {
        (0..self.working.len())
            .flat_map(|restart| {
                self.starts.iter().map(move |indices| StartJob {
                    restart,
                    indices: indices.clone(),
                })
            })
            .collect()
    }

    /// Starting data of a job: the working data with the job's coordinates
    /// moved to the front.
    pub fn start_data(&self, job: &StartJob) -> Result<DataSet> {
        let data = &self.working[job.restart].1;
        let order = permutation_order(data.p(), &job.indices)?;
        Ok(data.with_rows(data.rows().select_columns(&order), data.stage()))
    }

    /// Initial entropy of a start's projection.
    pub fn initial_entropy(&self, job: &StartJob) -> Result<f64> {
        let data = &self.working[job.restart].1;
        let y = data.rows().select_columns(&job.indices);
        Ok(estimate_entropy(&y, self.cfg.entropy()))
    }

    /// Which jobs get optimized, given their initial entropies (same order
    /// as [`Prepared::jobs`]).
    pub fn select_for_optimization(&self, initial: &[f64]) -> Vec<bool> {
        match (self.cfg.mode, &self.cfg.starts) {
            (Mode::IcsOnly, _) => alloc::vec![false; initial.len()],
            (_, StartPolicy::BestInitialOnly) => {
                let best = argmin(initial);
                (0..initial.len()).map(|k| Some(k) == best).collect()
            }
            _ => alloc::vec![true; initial.len()],
        }
    }

    /// Local PP from one start.
    pub fn run_job(&self, job: &StartJob) -> Result<LocalPpResult> {
        let start = self.start_data(job)?;
        local_pp(&start, self.cfg.d, &self.cfg.optimizer)
    }

    /// Scores every job and optimizes the selected ones, sequentially.
    pub fn run_all(&self) -> Result<Vec<StartOutcome>> {
        let jobs = self.jobs();
        let initial = jobs
            .iter()
            .map(|j| self.initial_entropy(j))
            .collect::<Result<Vec<_>>>()?;
        let selected = self.select_for_optimization(&initial);
        jobs.into_iter()
            .zip(initial)
            .zip(selected)
            .map(|((job, initial_h), run)| {
                let result = if run { Some(self.run_job(&job)?) } else { None };
                Ok(StartOutcome {
                    job,
                    initial_h,
                    result,
                })
            })
            .collect()
    }

    /// Picks the best start, recovers `B` and assembles the report.
    pub fn finish(&self, outcomes: Vec<StartOutcome>) -> Result<PipelineResult> {
        if outcomes.is_empty() {
            return Err(Error::InvalidIndices("no starts were evaluated"));
        }
        let p = self.centered.p();

        // Best: smallest final entropy among optimized starts (smallest
        // initial entropy if nothing was optimized). Starts that end within
        // FINAL_H_TIE of the minimum reached the same optimum; among those
        // the one with the smallest initial entropy wins, then job order.
        let any_optimized = outcomes.iter().any(|o| o.result.is_some());
        let score = |o: &StartOutcome| {
            if any_optimized {
                o.result.as_ref().map(|r| r.final_h)
            } else {
                Some(o.initial_h)
            }
        };
        let min = outcomes
            .iter()
            .filter_map(score)
            .fold(f64::INFINITY, f64::min);
        let best_idx = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| score(o).is_some_and(|v| v <= min + FINAL_H_TIE))
            .min_by(|(a, oa), (b, ob)| oa.initial_h.total_cmp(&ob.initial_h).then(a.cmp(b)))
            .map(|(k, _)| k)
            .expect("at least one outcome");

        let mut per_start: Vec<StartSummary> = outcomes
            .iter()
            .map(|o| StartSummary {
                restart: o.job.restart,
                indices: o.job.indices.clone(),
                initial_h: o.initial_h,
                final_h: o.result.as_ref().map_or(o.initial_h, |r| r.final_h),
                iterations: o.result.as_ref().map_or(0, |r| r.trace.iterations()),
                termination: o.result.as_ref().map(|r| r.trace.termination),
                trace: o.result.as_ref().map(|r| r.trace.clone()),
            })
            .collect();
        per_start.sort_by(|a, b| {
            a.initial_h
                .total_cmp(&b.initial_h)
                .then_with(|| (a.restart, &a.indices).cmp(&(b.restart, &b.indices)))
        });

        let mut outcomes = outcomes;
        let best_outcome = outcomes.swap_remove(best_idx);
        let job = best_outcome.job.clone();
        let (pre_rotation, _) = &self.working[job.restart];
        let order = permutation_order(p, &job.indices)?;
        let (final_data, rotation) = match &best_outcome.result {
            Some(r) => (r.rotated_data.rows().clone(), r.total_rotation.clone()),
            None => (
                self.start_data(&job)?.into_rows(),
                OrthogonalMatrix::identity(p),
            ),
        };

        let mut product = self.b0_inv.as_matrix().clone();
        if let Some(ics) = &self.ics {
            product = product.matmul(&ics.eigenvectors);
        }
        product = product
            .matmul(pre_rotation)
            .matmul(&permutation_matrix(&order))
            .matmul_t(&rotation);

        let b = recover_b(self.centered.rows(), &final_data)?;
        let ics_coordinates = self.ics.as_ref().map(|_| self.working[0].1.rows().clone());

        Ok(PipelineResult {
            best: best_outcome.result,
            best_start: job,
            per_start,
            center: self.centered.center().to_vec(),
            final_data,
            b,
            stagewise: Stagewise {
                b0_inv: self.b0_inv.clone(),
                ics: self.ics.clone(),
                pre_rotation: pre_rotation.clone(),
                permutation: order,
                rotation,
                product,
            },
            ics_coordinates,
        })
    }
}

fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v < values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Runs every stage sequentially.
pub fn run_pipeline(raw: &DataSet, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let prepared = prepare(raw, cfg)?;
    let outcomes = prepared.run_all()?;
    prepared.finish(outcomes)
}
