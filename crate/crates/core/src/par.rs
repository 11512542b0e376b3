//! Execution strategy for the data-parallel scans.
//!
//! With the `parallel` feature (default) [`Strategy::Parallel`] fans chunks
//! out over rayon; without it every strategy runs sequentially. Results are
//! always returned in chunk order so reductions are deterministic.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    #[default]
    Parallel,
}

impl Strategy {
    /// Whether this build can actually run chunks in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }
}

/// Applies `f` to every chunk index in `0..chunks`, returning results in
/// index order.
pub fn map_chunks<R, F>(strategy: Strategy, chunks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy == Strategy::Parallel {
        use rayon::prelude::*;
        return (0..chunks).into_par_iter().map(f).collect();
    }
    let _ = strategy;
    (0..chunks).map(f).collect()
}

/// Splits `[lo, hi]` into contiguous inclusive ranges of `chunk_len` values.
pub fn split_range(lo: u64, hi: u64, chunk_len: u64) -> Vec<(u64, u64)> {
    if lo > hi {
        return Vec::new();
    }
    let len = chunk_len.max(1);
    let mut out = Vec::new();
    let mut a = lo;
    loop {
        let b = a.saturating_add(len - 1).min(hi);
        out.push((a, b));
        if b == hi {
            break;
        }
        a = b + 1;
    }
    out
}
