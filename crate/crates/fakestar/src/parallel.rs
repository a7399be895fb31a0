//! Lockstep seed search on a rayon pool.

use fakestar_core::lockstep::{copycatch_from_seed, LockstepGroup, LockstepParams, RepoId, SeedRunner, StarGraph};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{AppError, AppResult};

pub struct RayonRunner {
    pool: ThreadPool,
}

impl RayonRunner {
    /// `threads == 0` uses rayon's default worker count.
    pub fn new(threads: usize) -> AppResult<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
        Ok(RayonRunner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl SeedRunner for RayonRunner {
    fn run(&self, graph: &StarGraph, seeds: &[RepoId], params: &LockstepParams) -> Vec<Option<LockstepGroup>> {
        // indexed collect keeps seed order
        self.pool
            .install(|| seeds.par_iter().map(|&s| copycatch_from_seed(graph, s, params)).collect())
    }
}
