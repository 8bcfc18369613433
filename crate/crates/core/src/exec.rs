//! Execution strategy for the data-parallel loops (batch search, rerank
//! scoring, per-question pipeline runs, fuzz/simulation sweeps).
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] fans
//! work out on the rayon pool. Without it every strategy runs sequentially,
//! so results never depend on which one was picked: outputs are always
//! returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving fallible map. On failure the error of the
    /// lowest-index failing item is returned, whatever the strategy.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            let results: Vec<Result<R, E>> = items.par_iter().map(f).collect();
            return results.into_iter().collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Execution::map`] but bounded to `width` worker threads.
    pub fn map_bounded<T, R, F>(self, width: usize, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            match rayon::ThreadPoolBuilder::new()
                .num_threads(width.max(1))
                .build()
            {
                Ok(pool) => return pool.install(|| items.par_iter().map(f).collect()),
                Err(e) => log::warn!("worker pool unavailable ({e}), running sequentially"),
            }
        }
        let _ = width;
        items.iter().map(f).collect()
    }
}
