//! Worker pools sized by `NEUROPLAN_THREADS`.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "NEUROPLAN_THREADS";

/// Worker count: `NEUROPLAN_THREADS` when set, otherwise the number of CPUs.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn worker_pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}
