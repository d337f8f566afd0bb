//! Data-parallel mapping helpers. With the `parallel` feature (default) the
//! mapped closures run on the rayon pool; otherwise they run sequentially.
//! Output order always matches input order, so results are identical either
//! way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, in parallel when enabled.
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Always-sequential variant, kept as the baseline for benchmarks.
pub fn map_items_seq<T, U, F>(items: &[T], mut f: F) -> Vec<U>
where
    F: FnMut(&T) -> U,
{
    items.iter().map(&mut f).collect()
}

/// Maps `f` over `0..n`, in parallel when enabled.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential index mapping, the benchmark baseline of
/// [`map_indices`].
pub fn map_indices_seq<U, F>(n: usize, mut f: F) -> Vec<U>
where
    F: FnMut(usize) -> U,
{
    (0..n).map(&mut f).collect()
}
