//! Data-parallel execution helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the row loops below run on rayon;
//! without it they are plain sequential loops. `set_sequential(true)` forces
//! the sequential path at runtime even in parallel builds, which is what the
//! benchmark suite uses to compare the two.
//!
//! Reductions keep a fixed association order (per-row partials combined in
//! row order), so results are bitwise identical across both paths and any
//! worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path at runtime (no-op in builds without rayon).
pub fn set_sequential(force: bool) {
    #[cfg(feature = "parallel")]
    FORCE_SEQUENTIAL.store(force, Ordering::Relaxed);
    #[cfg(not(feature = "parallel"))]
    let _ = force;
}

#[cfg(feature = "parallel")]
fn parallel_enabled() -> bool {
    !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// Fill `buf`, viewed as consecutive rows of `row_len`, one closure call per row.
pub fn fill_rows<F>(buf: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    debug_assert_eq!(buf.len() % row_len.max(1), 0);
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(row, chunk)| f(row, chunk));
        return;
    }
    for (row, chunk) in buf.chunks_mut(row_len).enumerate() {
        f(row, chunk);
    }
}

/// Map each row index to a value, preserving row order.
pub fn map_rows<T, F>(n_rows: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        return (0..n_rows).into_par_iter().map(f).collect();
    }
    (0..n_rows).map(f).collect()
}

/// Sum per-row partials in row order (fixed association).
pub fn sum_rows<F>(n_rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(n_rows, f).into_iter().sum()
}

/// Maximum of per-row partials.
pub fn max_rows<F>(n_rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(n_rows, f).into_iter().fold(0.0f64, f64::max)
}
