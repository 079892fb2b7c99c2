//! Replicate fan-out. With the `parallel` feature replicates run on a rayon
//! pool; otherwise they run in order on the calling thread. Results always
//! come back in replicate order, so aggregation does not depend on the
//! worker count.

/// Runs `f(0..count)` sequentially.
pub fn map_replicates_sequential<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

/// Runs `f(0..count)` on a rayon pool with `workers` threads (all cores
/// when `None`).
#[cfg(feature = "parallel")]
pub fn map_replicates_parallel<T, F>(count: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&f).collect();
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Default fan-out for the build: parallel when the feature is on.
pub fn map_replicates<T, F>(count: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_replicates_parallel(count, workers, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        map_replicates_sequential(count, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_replicates_sequential(100, |i| i * i);
        assert_eq!(map_replicates(100, Some(3), |i| i * i), seq);
        assert_eq!(map_replicates(100, None, |i| i * i), seq);
        assert!(map_replicates(0, Some(1), |i| i).is_empty());
    }
}
