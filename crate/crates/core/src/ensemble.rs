//! Ensemble fan-out over a worker pool. Results come back ordered by path
//! index, so merges downstream are deterministic.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct EnsembleRunner {
    pool: rayon::ThreadPool,
}

impl EnsembleRunner {
    /// `threads = None` uses one worker per core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn map<T, F>(&self, n_paths: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n_paths).into_par_iter().map(f).collect())
    }

    /// Like [`map`](Self::map), stopping at the first error by path index.
    pub fn try_map<T, E, F>(&self, n_paths: usize, f: F) -> std::result::Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> std::result::Result<T, E> + Sync + Send,
    {
        self.map(n_paths, f).into_iter().collect()
    }
}
