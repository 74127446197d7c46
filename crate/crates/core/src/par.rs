//! Example-level data parallelism.
//!
//! With the `parallel` feature the maps below run on a rayon pool; without it
//! (or with `jobs == 1`) they run sequentially. Outputs always come back in
//! input order, so results do not depend on the worker count.

/// Runs `f` over `items` and collects results in input order.
///
/// `jobs == 0` means "use the global pool"; `jobs == 1` forces the sequential path.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    if jobs == 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    if jobs == 0 {
        return items.par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, R, F>(items: &[T], _jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Whether this build carries the rayon backend.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
