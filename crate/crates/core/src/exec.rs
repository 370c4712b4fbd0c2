//! Replication fan-out.
//!
//! With the `parallel` feature, [`Execution::Parallel`] runs replications on
//! the rayon pool; without it every mode falls back to a plain loop. Output
//! order always follows the replication index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Evaluates `f(0), f(1), ..., f(count - 1)` and returns the results in index order.
    pub fn map<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            _ => (0..count).map(f).collect(),
        }
    }

    /// Like [`Execution::map`] for fallible work; the first error by index wins.
    pub fn try_map<T, E, F>(self, count: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(count, f).into_iter().collect()
    }
}
