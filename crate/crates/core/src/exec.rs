//! Worker pool wrapper with order-stable parallel maps.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Default)]
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
    sequential: bool,
}

impl Executor {
    /// `workers = 0` uses the global rayon pool; `1` runs everything inline.
    pub fn new(workers: usize) -> Result<Self> {
        match workers {
            0 => Ok(Self { pool: None, sequential: false }),
            1 => Ok(Self::sequential()),
            n => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
                Ok(Self { pool: Some(pool), sequential: false })
            }
        }
    }

    pub fn sequential() -> Self {
        Self { pool: None, sequential: true }
    }

    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        if self.sequential {
            return (0..n).map(f).collect();
        }
        match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).into_par_iter().map(f).collect(),
        }
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.map_range(items.len(), |i| f(&items[i]))
    }
}

