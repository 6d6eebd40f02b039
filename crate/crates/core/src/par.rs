//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the hot loops fan out over rayon;
//! without it the same code runs on plain iterators. Reductions are written
//! so the result is independent of the thread count: floating-point sums are
//! folded in sample order after an ordered collect, and min/max reductions
//! are order-insensitive.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n` and collect results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Minimum of `f` over `0..n` under a total order on `T`.
pub fn min_indexed<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send + PartialOrd,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .map(f)
            .min_by(|a, b| a.partial_cmp(b).expect("non-comparable reduction value"))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n)
            .map(f)
            .min_by(|a, b| a.partial_cmp(b).expect("non-comparable reduction value"))
    }
}

/// Derive a per-task seed from a base seed. SplitMix64 finalizer, so distinct
/// tasks get well-separated streams and the derivation is stable across runs.
pub fn derive_seed(base: u64, task: u64) -> u64 {
    let mut z = base ^ task.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
