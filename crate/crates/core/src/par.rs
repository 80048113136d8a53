//! Fixed-boundary chunking of path index ranges.
//!
//! Paths are grouped into chunks of [`CHUNK`] consecutive indices. Each chunk
//! is folded sequentially and chunk results are returned in index order, so
//! any reduction over them is independent of the worker count.

use std::ops::Range;

use crate::error::Result;

pub const CHUNK: u64 = 1024;

/// How chunks are scheduled. `Parallel` degrades to `Sequential` when the
/// crate is built without the `parallel` feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

pub fn chunks(n: u64) -> Vec<Range<u64>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Apply `f` to every chunk of `0..n`. On failure the error of the lowest
/// failing chunk is returned.
pub fn map_chunks<T, F>(exec: Exec, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    let ranges = chunks(n);
    let results: Vec<Result<T>> = match exec {
        Exec::Sequential => ranges.into_iter().map(&f).collect(),
        Exec::Parallel => parallel(ranges, &f),
    };
    results.into_iter().collect()
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(ranges: Vec<Range<u64>>, f: &F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    ranges.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(ranges: Vec<Range<u64>>, f: &F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    ranges.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_partition_the_range() {
        let c = chunks(2500);
        assert_eq!(c, vec![0..1024, 1024..2048, 2048..2500]);
        assert!(chunks(0).is_empty());
    }

    #[test]
    fn schedules_agree() {
        let f = |r: Range<u64>| Ok(r.map(|i| i * i).sum::<u64>());
        let a = map_chunks(Exec::Sequential, 5000, f).unwrap();
        let b = map_chunks(Exec::Parallel, 5000, f).unwrap();
        assert_eq!(a, b);
    }
}
