//! Data-parallel helpers. With the `parallel` feature (default) they run on
//! the rayon pool; without it, and in the explicit `*_seq` variants, they
//! run on the calling thread. Output order never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with the rayon backend.
pub const PARALLEL: bool = cfg!(feature = "parallel");

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
        map_seq(items, f)
    }
}

pub fn map_seq<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Applies `f` to consecutive chunks of `chunk` items.
pub fn chunk_map<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(chunk).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunk_map_seq(items, chunk, f)
    }
}

pub fn chunk_map_seq<T, R, F: Fn(&[T]) -> R>(items: &[T], chunk: usize, f: F) -> Vec<R> {
    items.chunks(chunk).map(f).collect()
}
