//! Data-parallel execution of independent work items.
//!
//! Every randomized sweep in this crate derives one generator per item
//! from `(seed, item index)`, so results are order-independent and the
//! parallel and sequential paths produce identical output. With the
//! `parallel` feature (default) [`map_indexed`] fans out on the global
//! rayon pool; without it, it degrades to [`map_indexed_seq`]. The
//! sequential variant stays public so benchmarks can compare both paths
//! in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to `0..n`, in parallel when the `parallel` feature is on.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Sequential fallback for [`map_indexed`]; always runs on the caller's thread.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
