//! Index-addressed ensemble execution.
//!
//! Each member of an ensemble is a pure function of its index, so results
//! are identical whichever backend runs them. With the `parallel` feature
//! (on by default) the top-level functions fan out over the ambient rayon
//! pool; without it they fall back to a plain loop. Both backends stay
//! addressable through [`sequential`] and [`parallel`] for benchmarking.

pub mod sequential {
    /// Evaluates `f(0..count)` in index order.
    pub fn map_indexed<T, F>(count: u64, f: F) -> Vec<T>
    where
        F: Fn(u64) -> T,
    {
        (0..count).map(f).collect()
    }

    /// Number of indices in `0..count` for which `pred` holds.
    pub fn count_where<F>(count: u64, pred: F) -> u64
    where
        F: Fn(u64) -> bool,
    {
        (0..count).filter(|&i| pred(i)).count() as u64
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    /// Evaluates `f(0..count)` on the current rayon pool; output is in index order.
    pub fn map_indexed<T, F>(count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).into_par_iter().map(f).collect()
    }

    pub fn count_where<F>(count: u64, pred: F) -> u64
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        (0..count).into_par_iter().filter(|&i| pred(i)).count() as u64
    }
}

#[cfg(feature = "parallel")]
pub use parallel::{count_where, map_indexed};
#[cfg(not(feature = "parallel"))]
pub use sequential::{count_where, map_indexed};
