//! Data-parallel fan-out for independent work items: benchmark repeats,
//! search grid cells, test batteries. With the `parallel` feature (default)
//! the fan-out runs on rayon; without it the same entry points run
//! sequentially, so callers never branch on the feature themselves.
//!
//! Outputs are ordered by input index either way, so results are identical
//! across both execution modes.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Plain sequential map with the same signature, for side-by-side
/// comparisons in benchmarks and tests.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Caps the worker pool. A no-op without the `parallel` feature or once a
/// pool exists (the first call wins, matching rayon's global pool rules).
pub fn configure_threads(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let items: Vec<u64> = (0..257).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e3779b97f4a7c15).rotate_left(17);
        assert_eq!(par_map(&items, f), seq_map(&items, f));
    }
}
