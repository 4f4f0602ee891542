//! `manifest.json`: what was run, on what, and what came out.
//!
//! Start indices are 1-based here, as on the command line.

use ppics_core::pipeline::{PipelineResult, StartSummary};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub input: InputFingerprint,
    /// Ĥ of an exact standard normal sample in `d` dimensions at the same `h`.
    pub reference_entropy: f64,
    /// Subtracted from the raw rows before `B` is applied.
    pub center: Vec<f64>,
    pub starts: Vec<StartRow>,
    pub best: StartRow,
    pub best_final_h: f64,
    /// Max-norm gap between `B` and the product of the stage transforms.
    pub b_discrepancy: f64,
    pub all_starts_capped: bool,
    pub outputs: Vec<String>,
    pub timings_ms: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub d: usize,
    pub mode: String,
    pub starts: String,
    pub h: f64,
    pub nu: f64,
    pub gamma: f64,
    pub delta0: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub restarts: usize,
    pub seed: u64,
    pub jobs: usize,
    pub snapshot_iters: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub path: String,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
    pub column_names: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRow {
    pub restart: usize,
    pub indices: Vec<usize>,
    pub initial_h: f64,
    /// Equal to `initial_h` for starts that were scored but not optimized.
    pub final_h: f64,
    pub iterations: usize,
    pub termination: Option<String>,
    pub final_grad_norm_sq: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ingest: f64,
    pub pipeline: f64,
    pub outputs: f64,
}

/// 0-based library indices to 1-based.
pub fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|k| k + 1).collect()
}

impl StartRow {
    pub fn from_summary(s: &StartSummary) -> Self {
        StartRow {
            restart: s.restart,
            indices: one_based(&s.indices),
            initial_h: s.initial_h,
            final_h: s.final_h,
            iterations: s.iterations,
            termination: s.termination.map(|t| t.name().to_owned()),
            final_grad_norm_sq: s.trace.as_ref().map(|t| t.final_grad_norm_sq),
        }
    }
}

/// Per-start table and best-start row of a finished run.
pub fn start_rows(result: &PipelineResult) -> (Vec<StartRow>, StartRow) {
    let rows: Vec<StartRow> = result
        .per_start
        .iter()
        .map(StartRow::from_summary)
        .collect();
    let best = result
        .per_start
        .iter()
        .position(|s| {
            s.restart == result.best_start.restart && s.indices == result.best_start.indices
        })
        .map(|k| rows[k].clone())
        .expect("best start is one of the listed starts");
    (rows, best)
}
