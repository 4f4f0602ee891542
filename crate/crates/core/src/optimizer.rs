//! Local projection pursuit: gradient descent on the orthogonal group with
//! step halving.
//!
//! Starting from observations whose first `d` coordinates form the initial
//! projection, each outer iteration computes the gradient matrix `Ĉ`, takes
//! its thin SVD `Ĉ = W diag(σ) Vᵀ`, and tries the rotation
//! `U = exp([[0, −V diag(σ) Wᵀ], [W diag(σ) Vᵀ, 0]])` applied as `xᵢ ← U xᵢ`.
//! The step `t = 2⁻ᵏ` (equivalently `σ ← σ / 2ᵏ`) is accepted at the first `k`
//! where the index drops by at least `t ‖Ĉ‖²_F / 3`. The loop ends once
//! `‖Ĉ‖²_F` falls below the threshold.

use alloc::vec::Vec;

use crate::entropy::{EntropyConfig, EntropyIndex, PpIndex};
use crate::error::{Error, Result};
use crate::linalg::{structured_exp, thin_svd, Matrix, OrthogonalMatrix};
use crate::scatter::{DataSet, Stage};

pub const DEFAULT_THRESHOLD: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Stop once `‖Ĉ‖²_F` is below this.
    pub threshold: f64,
    pub max_outer_iters: usize,
    pub max_halvings: usize,
    pub entropy: EntropyConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            max_outer_iters: 1000,
            max_halvings: 60,
            entropy: EntropyConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::InvalidConfig("threshold must be finite and > 0"));
        }
        if self.max_outer_iters == 0 || self.max_halvings == 0 {
            return Err(Error::InvalidConfig("iteration caps must be >= 1"));
        }
        EntropyConfig::new(self.entropy.bandwidth()).map(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GradientBelowThreshold,
    MaxIters,
    /// No step size down to `2^-max_halvings` passed the acceptance test.
    StepFloor,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GradientBelowThreshold => "gradient_below_threshold",
            Termination::MaxIters => "max_iters",
            Termination::StepFloor => "step_floor",
        }
    }

    pub fn is_cap(self) -> bool {
        self != Termination::GradientBelowThreshold
    }
}

/// One accepted outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iter: usize,
    pub h_before: f64,
    pub h_after: f64,
    /// `‖Ĉ‖²_F` at the start of the iteration.
    pub grad_norm_sq: f64,
    pub halvings: usize,
    /// `2^-halvings`.
    pub accepted_t: f64,
}

impl IterationRecord {
    /// The threshold the accepted step had to beat: `t ‖Ĉ‖²_F`.
    pub fn acceptance_delta(&self) -> f64 {
        self.accepted_t * self.grad_norm_sq
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// `‖Ĉ‖²_F` at the final data.
    pub final_grad_norm_sq: f64,
}

impl PpTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalPpResult {
    /// `total_rotation · xᵢ` for every input row.
    pub rotated_data: DataSet,
    /// Product of the accepted rotations, latest on the left.
    pub total_rotation: OrthogonalMatrix,
    pub initial_h: f64,
    pub final_h: f64,
    pub trace: PpTrace,
}

/// `H − H_tmp ≥ delta / 3`.
pub fn armijo_accept(h: f64, h_tmp: f64, delta: f64) -> bool {
    h - h_tmp >= delta / 3.0
}

/// Reorders coordinates so `selected` (0-based, in the given order) come
/// first, followed by the remaining ones ascending. Row `i` of the output is
/// `Uᵀxᵢ` for the permutation matrix `U = [e_{j(1)} … e_{j(d)} e_{ℓ(1)} …]`.
pub fn permute_components(data: &DataSet, selected: &[usize]) -> Result<DataSet> {
    let order = permutation_order(data.p(), selected)?;
    Ok(data.with_rows(data.rows().select_columns(&order), data.stage()))
}

/// Full column order `(j(1), …, j(d), ℓ(1), …, ℓ(p−d))`.
pub fn permutation_order(p: usize, selected: &[usize]) -> Result<Vec<usize>> {
    if selected.is_empty() || selected.len() >= p {
        return Err(Error::InvalidIndices("need 1 <= d < p selected components"));
    }
    let mut seen = alloc::vec![false; p];
    for &j in selected {
        if j >= p {
            return Err(Error::InvalidIndices("component index out of range"));
        }
        if seen[j] {
            return Err(Error::InvalidIndices("duplicate component index"));
        }
        seen[j] = true;
    }
    let mut order: Vec<usize> = selected.to_vec();
    order.extend((0..p).filter(|&j| !seen[j]));
    Ok(order)
}

/// Permutation matrix `U` with `U[order[k], k] = 1`.
pub fn permutation_matrix(order: &[usize]) -> Matrix {
    let p = order.len();
    let mut u = Matrix::zeros(p, p);
    for (k, &j) in order.iter().enumerate() {
        u[(j, k)] = 1.0;
    }
    u
}

/// Local PP with the entropy index.
pub fn local_pp(data: &DataSet, d: usize, cfg: &OptimizerConfig) -> Result<LocalPpResult> {
    local_pp_with_index(data, d, cfg, &EntropyIndex::new(cfg.entropy))
}

/// Local PP for any orthogonally invariant index.
pub fn local_pp_with_index<I: PpIndex + ?Sized>(
    data: &DataSet,
    d: usize,
    cfg: &OptimizerConfig,
    index: &I,
) -> Result<LocalPpResult> {
    cfg.validate()?;
    let (n, p) = data.rows().shape();
    if d == 0 || d >= p {
        return Err(Error::InvalidConfig(
            "projection dimension must satisfy 1 <= d < p",
        ));
    }
    if n < 2 {
        return Err(Error::TooFewObservations { n, p });
    }

    let mut ws = I::Workspace::default();
    let mut x = data.rows().clone();
    let mut total = Matrix::identity(p);
    let mut h = index.value_in(&x.columns(0, d), &mut ws);
    let initial_h = h;
    let mut c_hat = index.gradient_matrix_in(&x, d, &mut ws)?;
    let mut grad_sq = c_hat.norm_sq();
    let mut records = Vec::new();

    let termination = loop {
        if grad_sq < cfg.threshold {
            break Termination::GradientBelowThreshold;
        }
        if records.len() >= cfg.max_outer_iters {
            break Termination::MaxIters;
        }
        let svd = thin_svd(&c_hat);
        let mut delta = grad_sq;
        let mut step = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            let u = structured_exp(&svd.scaled(step), d, p)?;
            // Only the leading d rows of U are needed to score the step.
            let y_tmp = x.matmul_t(&u.rows_range(0, d));
            let h_tmp = index.value_in(&y_tmp, &mut ws);
            if armijo_accept(h, h_tmp, delta) {
                break Some((u, h_tmp));
            }
            if halvings >= cfg.max_halvings {
                break None;
            }
            delta *= 0.5;
            step *= 0.5;
            halvings += 1;
        };
        let Some((u, h_tmp)) = accepted else {
            break Termination::StepFloor;
        };
        x = x.matmul_t(&u);
        total = u.matmul(&total);
        records.push(IterationRecord {
            iter: records.len() + 1,
            h_before: h,
            h_after: h_tmp,
            grad_norm_sq: grad_sq,
            halvings,
            accepted_t: step,
        });
        h = h_tmp;
        // The accepted trial was evaluated last, so its kernels are reused.
        c_hat = index.gradient_matrix_in(&x, d, &mut ws)?;
        grad_sq = c_hat.norm_sq();
    };

    Ok(LocalPpResult {
        rotated_data: data.with_rows(x, Stage::Current),
        total_rotation: OrthogonalMatrix::from_matrix_unchecked(total),
        initial_h,
        final_h: h,
        trace: PpTrace {
            records,
            termination,
            final_grad_norm_sq: grad_sq,
        },
    })
}
