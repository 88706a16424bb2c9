//! Thread-pool executor for quadrature batches.

use bubbleforge_core::quadrature::{Estimate, Executor};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "BUBBLEFORGE_THREADS";

/// Runs cell batches on a rayon pool. Results come back in index order, so
/// the integration outcome does not depend on the thread count.
pub struct PoolExecutor {
    pool: rayon::ThreadPool,
}

impl PoolExecutor {
    pub fn new(threads: Option<usize>) -> anyhow::Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Ok(PoolExecutor { pool: b.build()? })
    }

    /// Thread cap from `BUBBLEFORGE_THREADS`, if set.
    pub fn from_env() -> anyhow::Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {s:?}")
            })?),
            Err(_) => None,
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for PoolExecutor {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Estimate + Sync)) -> Vec<Estimate> {
        if self.pool.current_num_threads() <= 1 {
            return (0..n).map(job).collect();
        }
        self.pool
            .install(|| (0..n).into_par_iter().map(job).collect())
    }
}
