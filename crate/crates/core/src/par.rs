//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! global pool (or whatever pool the caller `install`s); without it they fall
//! back to plain sequential iteration with identical output order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Order-independent sum of `f` over `items`. Integer-valued for determinism.
pub fn count<T, F>(items: &[T], f: F) -> usize
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().filter(|x| f(x)).count()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().filter(|x| f(x)).count()
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
