//! Deterministic parallel execution of independent work units.
//!
//! Units are claimed from a shared counter and computed on scoped threads;
//! results are reassembled by unit index, so the outcome is identical to a
//! sequential run regardless of worker count or scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Runs `count` units on up to `workers` threads and returns the results
/// in unit order.
pub fn run_units<T, F>(count: usize, workers: usize, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(run).collect();
    }

    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(count));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut local = Vec::new();
                loop {
                    let unit = next.fetch_add(1, Ordering::Relaxed);
                    if unit >= count {
                        break;
                    }
                    local.push((unit, run(unit)));
                }
                collected.lock().unwrap().extend(local);
            });
        }
    });

    let mut results = collected.into_inner().unwrap();
    results.sort_by_key(|(unit, _)| *unit);
    results.into_iter().map(|(_, value)| value).collect()
}

/// Default worker count: the machine's available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
