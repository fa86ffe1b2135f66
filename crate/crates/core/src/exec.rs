//! Ordered batch execution, parallel when the `parallel` feature is on.

/// Runs a function over a slice and returns results in input order.
///
/// `jobs == 1` always runs on the calling thread. Otherwise a dedicated
/// rayon pool of `jobs` threads is used (`0` means one per core). Without
/// the `parallel` feature every executor is sequential.
#[derive(Debug)]
pub struct Executor {
    jobs: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn new(jobs: usize) -> Executor {
        #[cfg(feature = "parallel")]
        {
            let pool = if jobs == 1 {
                None
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .ok()
            };
            Executor { jobs, pool }
        }
        #[cfg(not(feature = "parallel"))]
        Executor { jobs }
    }

    pub fn sequential() -> Executor {
        Executor::new(1)
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        false
    }

    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::new(0)
    }
}
