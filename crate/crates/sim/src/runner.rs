//! Parallel trial execution.

use rayon::prelude::*;

use cellfree_core::experiment::{run_trial, ExperimentConfig, SweepAccumulator, SweepResult};

use crate::SimError;

/// Runs every trial of `cfg`, on `workers` threads if given. Trials are
/// independent and keyed by index, so the result does not depend on the
/// worker count.
pub fn run_trials(cfg: &ExperimentConfig, workers: Option<usize>, diagnostics: bool) -> Result<SweepAccumulator, SimError> {
    cfg.validate()?;
    let work = || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, t, diagnostics))
            .collect::<Result<Vec<_>, _>>()
    };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::config("--workers", e.to_string()))?
            .install(work),
        None => work(),
    }?;
    let mut acc = SweepAccumulator::new();
    for rec in records {
        acc.push(rec);
    }
    Ok(acc)
}

pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepResult, SimError> {
    Ok(run_trials(cfg, workers, false)?.finish(cfg)?)
}
