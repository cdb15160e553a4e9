//! Worker pool for objective batches and surrogate queries. Results are
//! collected in index order, so the worker count never changes output.

use rayon::prelude::*;
use rayon::ThreadPool;
use smoothopt_core::optimizer::Executor;
use smoothopt_core::{Objective, Result};

pub fn pool(workers: usize) -> std::result::Result<ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()
}

pub struct PoolExecutor<'a> {
    pool: &'a ThreadPool,
}

impl<'a> PoolExecutor<'a> {
    pub fn new(pool: &'a ThreadPool) -> Self {
        Self { pool }
    }
}

impl Executor for PoolExecutor<'_> {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Spreads `evaluate_batch` over the pool.
pub struct PoolObjective<'a> {
    inner: &'a dyn Objective,
    pool: &'a ThreadPool,
}

impl<'a> PoolObjective<'a> {
    pub fn new(inner: &'a dyn Objective, pool: &'a ThreadPool) -> Self {
        Self { inner, pool }
    }
}

impl Objective for PoolObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.inner.evaluate(x)
    }

    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Result<f64>> {
        self.pool.install(|| xs.par_iter().map(|x| self.inner.evaluate(x)).collect())
    }
}
