//! Work partitioning for the dense kernels.
//!
//! Every parallel kernel in this crate maps an index range to per-index
//! values and then reduces the ordered result sequentially, so the output is
//! bit-identical whether or not the `parallel` feature is enabled.

/// Evaluate `f` on `0..n`, preserving index order in the output.
pub fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // chunks amortize scheduling overhead; per-index values and the
        // caller's ordered reduction are unaffected
        (0..n).into_par_iter().with_min_len(32).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Single-threaded variant, kept callable in all builds for benchmarking and
/// reproducibility checks.
pub fn ordered_map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Cap the worker pool at `n` threads. A no-op in sequential builds or once
/// a pool exists; results never depend on the thread count either way.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}
