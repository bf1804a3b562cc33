//! Deterministic data-parallel helpers.
//!
//! Every parallel construct in this crate goes through [`map_ordered`]: an
//! indexed map whose results are collected back in input order and reduced
//! sequentially by the caller. Outputs are therefore bit-identical for any
//! worker count, including the sequential fallback built without the
//! `parallel` feature. [`map_sequential`] is always available so benchmarks
//! can compare the two paths inside one binary.

/// Sequential reference implementation: plain ordered map.
pub fn map_sequential<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Ordered map over independent work items.
///
/// With the `parallel` feature enabled this fans out over the global rayon
/// pool; results are still returned in input order, so any subsequent
/// reduction is deterministic. Without the feature it is an alias for
/// [`map_sequential`].
#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    map_sequential(items, f)
}

/// Caps the global worker pool at `n` threads (0 keeps the library default).
///
/// Call once at process start, before any parallel work. Later calls are
/// ignored if a pool already exists; results do not depend on the pool size,
/// only wall-clock time does. A no-op without the `parallel` feature.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            // An Err here means the global pool was already built (e.g. by a
            // previous call or another library); determinism is unaffected.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
