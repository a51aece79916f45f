//! Runs independent trials on a fixed-size worker pool; results come back in
//! trial order regardless of scheduling.

use rayon::prelude::*;

use crate::error::CliError;

pub fn map_trials<T, F>(workers: usize, trials: u64, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64) -> Result<T, CliError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::precondition(format!("worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}
