//! Thin wrapper over rayon so the crate builds without a thread pool
//! (wasm targets use the `parallel`-less sequential path). Results are
//! collected in input order either way, so outputs never depend on
//! scheduling.

#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Run `f` on a pool of `threads` workers when the `parallel` feature is on;
/// `None` uses rayon's default sizing.
#[cfg(feature = "parallel")]
pub fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("worker pool");
            pool.install(f)
        }
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_pool<R>(_threads: Option<usize>, f: impl FnOnce() -> R) -> R {
    f()
}
