//! Data ingestion, experiment orchestration and reporting for the `spike`
//! command-line tool.

pub mod classify;
pub mod error;
pub mod ingest;
pub mod json;
pub mod loocv;
pub mod montecarlo;
pub mod report;
pub mod spectra;

pub use error::{HarnessError, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPIKE_THREADS";

/// Worker pool sized by `SPIKE_THREADS` when set, else by rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))
}
