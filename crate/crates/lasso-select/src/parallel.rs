//! Parallel experiment driver.
//!
//! Replicates run on a rayon pool; outcomes are collected in job order, so the
//! result is identical to a sequential run whatever the thread count.

use std::time::Instant;

use lasso_select_core::harness::{run_experiment_with, ExperimentConfig, ExperimentResult};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LASSO_SELECT_THREADS";

/// Thread cap from [`THREADS_ENV`]; `None` lets rayon decide.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

pub fn run_parallel(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
    let start = Instant::now();
    let mut result = pool.install(|| {
        run_experiment_with(cfg, |jobs, f| jobs.par_iter().map(|&(n, seed)| f(n, seed)).collect())
    })?;
    result.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    Ok(result)
}

/// [`run_parallel`] with the thread cap taken from the environment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_parallel(cfg, thread_cap()?)
}
