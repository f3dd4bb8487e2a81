use anyhow::{Context, Result};
use rayon::prelude::*;
use ssm_mirfs::exec::Executor;

/// Replications spread over a rayon pool; results come back in index order.
pub struct Pool(rayon::ThreadPool);

impl Pool {
    /// `workers = None` uses every available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n.max(1));
        }
        Ok(Self(b.build().context("starting worker pool")?))
    }

    pub fn workers(&self) -> usize {
        self.0.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.0.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
