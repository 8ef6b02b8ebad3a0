//! Index-ordered parallel map.
//!
//! Every Monte Carlo sample and cubature node is keyed by its index, and the
//! results come back in index order, so reductions done by the caller are
//! independent of the worker count. Without the `parallel` feature the same
//! functions run sequentially.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(len, f)
}

/// Sequential reference path, always available.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Runs `op` on a pool with `workers` threads (`0` keeps the global pool).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: usize, op: impl FnOnce() -> T + Send) -> T {
    op()
}
