//! Location centering and the two scatter estimators.
//!
//! The preliminary scatter is the sample covariance. The second one is the
//! one-step symmetrized M-estimator
//!
//! ```text
//! Σ̂ = C · Σ_{i<j} (xᵢ − xⱼ)(xᵢ − xⱼ)ᵀ / (ν + ‖xᵢ − xⱼ‖²)^γ
//! ```
//!
//! which only sees pairwise differences, so it is translation invariant and
//! orthogonally equivariant. `ν = 0, γ = 1` gives the symmetrized
//! distribution-free (Tyler-type) shape estimate; larger `γ` puts more weight
//! on close pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

/// Pairs closer than this (squared distance) are skipped when `ν = 0`.
pub const DUPLICATE_PAIR_EPS: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Scale so that `trace(Σ̂) = p`.
    #[default]
    TraceP,
    /// Plain sum, `C = 1`.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterConfig {
    pub nu: f64,
    pub gamma: f64,
    pub normalization: Normalization,
}

impl ScatterConfig {
    pub fn new(nu: f64, gamma: f64) -> Result<Self> {
        let cfg = Self {
            nu,
            gamma,
            normalization: Normalization::TraceP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::InvalidConfig("nu must be finite and >= 0"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be finite and > 0"));
        }
        Ok(())
    }
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            nu: 0.0,
            gamma: 1.0,
            normalization: Normalization::TraceP,
        }
    }
}

/// Which transformation a [`DataSet`] has gone through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Raw,
    Centered,
    Pre,
    Ics,
    Current,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Centered => "centered",
            Stage::Pre => "prewhitened",
            Stage::Ics => "ics",
            Stage::Current => "current",
        }
    }
}

/// `n × p` observations (rows) with the location that was subtracted from
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    rows: Matrix,
    center: Vec<f64>,
    stage: Stage,
}

impl DataSet {
    /// Raw data; requires `n ≥ 2`, `p ≥ 2` and finite entries.
    pub fn new(rows: Matrix) -> Result<Self> {
        let (n, p) = rows.shape();
        if n < 2 || p < 2 {
            return Err(Error::TooFewObservations { n, p });
        }
        for (i, row) in rows.rows_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        Ok(Self {
            rows,
            center: vec![0.0; p],
            stage: Stage::Raw,
        })
    }

    /// Replaces the rows, keeping the location metadata.
    pub fn with_rows(&self, rows: Matrix, stage: Stage) -> Self {
        assert_eq!(rows.shape(), self.rows.shape());
        Self {
            rows,
            center: self.center.clone(),
            stage,
        }
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn into_rows(self) -> Matrix {
        self.rows
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }
}

/// Subtracts the column means.
pub fn center(data: &DataSet) -> Result<DataSet> {
    if data.stage != Stage::Raw {
        return Err(Error::StageMismatch {
            expected: Stage::Raw.name(),
            found: data.stage.name(),
        });
    }
    let mut rows = data.rows.clone();
    let mean = column_means(&rows);
    subtract(&mut rows, &mean);
    // A second pass removes the rounding left by the first.
    let residual = column_means(&rows);
    subtract(&mut rows, &residual);
    let center = mean.iter().zip(&residual).map(|(m, r)| m + r).collect();
    Ok(DataSet {
        rows,
        center,
        stage: Stage::Centered,
    })
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.nrows() as f64;
    let mut sums = vec![0.0; x.ncols()];
    for row in x.rows_iter() {
        sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    sums.iter_mut().for_each(|s| *s /= n);
    sums
}

fn subtract(x: &mut Matrix, v: &[f64]) {
    for i in 0..x.nrows() {
        x.row_mut(i).iter_mut().zip(v).for_each(|(a, b)| *a -= b);
    }
}

/// `(n − 1)⁻¹ Σᵢ xᵢxᵢᵀ` for already centered rows.
pub fn sample_covariance(x: &Matrix) -> SymMatrix {
    let n = x.nrows();
    let s = x.t_matmul(x).scale(1.0 / (n as f64 - 1.0));
    SymMatrix::new(s).expect("XᵀX is square")
}

/// One-step symmetrized M-estimator of scatter.
///
/// Pairs are accumulated row block by row block (all `j > i` for one `i`
/// into a local sum, then into the total), in a fixed order.
pub fn one_step_m_scatter(x: &Matrix, cfg: &ScatterConfig) -> Result<SymMatrix> {
    cfg.validate()?;
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::TooFewObservations { n, p });
    }
    let mut total = vec![0.0; p * p];
    let mut block = vec![0.0; p * p];
    let mut diff = vec![0.0; p];
    let mut used = 0usize;
    for i in 0..n {
        block.iter_mut().for_each(|b| *b = 0.0);
        let xi = x.row(i);
        for j in (i + 1)..n {
            let xj = x.row(j);
            let mut r2 = 0.0;
            for k in 0..p {
                diff[k] = xi[k] - xj[k];
                r2 += diff[k] * diff[k];
            }
            if cfg.nu == 0.0 && r2 < DUPLICATE_PAIR_EPS {
                continue;
            }
            used += 1;
            let w = weight(cfg, r2);
            for a in 0..p {
                let wa = w * diff[a];
                let row = &mut block[a * p..a * p + a + 1];
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot += wa * diff[b];
                }
            }
        }
        total.iter_mut().zip(&block).for_each(|(t, b)| *t += b);
    }
    if used == 0 {
        return Err(Error::DegeneratePairs);
    }
    for a in 0..p {
        for b in 0..a {
            total[b * p + a] = total[a * p + b];
        }
    }
    let mut out = Matrix::from_row_major(p, p, total);
    if cfg.normalization == Normalization::TraceP {
        let tr = out.trace();
        if !(tr > 0.0) {
            return Err(Error::DegeneratePairs);
        }
        out = out.scale(p as f64 / tr);
    }
    SymMatrix::new(out)
}

#[inline]
fn weight(cfg: &ScatterConfig, r2: f64) -> f64 {
    let base = cfg.nu + r2;
    if cfg.gamma == 1.0 {
        1.0 / base
    } else {
        libm::pow(base, -cfg.gamma)
    }
}
