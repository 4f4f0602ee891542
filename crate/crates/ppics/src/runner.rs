//! Runs the per-start optimizations of a pipeline on a thread pool.
//!
//! Jobs are scored and optimized in parallel but collected in job order, so
//! the result is identical for every thread count.

use ppics_core::pipeline::{prepare, PipelineConfig, PipelineResult, Prepared, StartOutcome};
use ppics_core::scatter::DataSet;
use rayon::prelude::*;

use crate::error::{AppError, AppResult};

/// Worker count used when none is given.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run_parallel(raw: &DataSet, cfg: &PipelineConfig, jobs: usize) -> AppResult<PipelineResult> {
    Ok(run_prepared(raw, cfg, jobs)?.1)
}

/// Like [`run_parallel`], also returning the shared stage outputs.
pub fn run_prepared(
    raw: &DataSet,
    cfg: &PipelineConfig,
    jobs: usize,
) -> AppResult<(Prepared, PipelineResult)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| AppError::Argument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let prepared = prepare(raw, cfg)?;
        let jobs = prepared.jobs();
        let initial = jobs
            .par_iter()
            .map(|j| prepared.initial_entropy(j))
            .collect::<Result<Vec<_>, _>>()?;
        let selected = prepared.select_for_optimization(&initial);
        let outcomes = jobs
            .into_par_iter()
            .zip(initial)
            .zip(selected)
            .map(|((job, initial_h), run)| {
                let result = if run {
                    Some(prepared.run_job(&job)?)
                } else {
                    None
                };
                Ok(StartOutcome {
                    job,
                    initial_h,
                    result,
                })
            })
            .collect::<Result<Vec<_>, ppics_core::Error>>()?;
        let result = prepared.finish(outcomes)?;
        Ok((prepared, result))
    })
}
