//! Data-parallel fan-out with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! global pool. Results always come back in input order, so any reduction done
//! afterwards is independent of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel;
        #[cfg(not(feature = "parallel"))]
        return Execution::Sequential;
    }
}

impl Execution {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }
}
