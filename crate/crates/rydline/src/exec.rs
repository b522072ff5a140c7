//! Task execution: data-parallel over independent work items with rayon, or
//! strictly sequential. Results come back ordered by task index either way,
//! so campaign output never depends on scheduling or worker count.

/// Map `f` over `0..n` sequentially. Always available; the reference
/// execution path for determinism checks and benchmarks.
pub fn map_tasks_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Map `f` over `0..n` on the rayon thread pool, collecting in index order.
#[cfg(feature = "parallel")]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    map_tasks_sequential(n, f)
}
