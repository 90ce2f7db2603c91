//! Deterministic fan-out over paths.
//!
//! Work is cut into fixed chunks of [`CHUNK`] paths. Each chunk is folded
//! sequentially and the chunk results are merged by a fixed balanced tree, so
//! the result does not depend on how chunks are scheduled across workers.

use alloc::vec::Vec;
use core::ops::Range;

pub const CHUNK: usize = 512;

/// Folds `n` items in chunks and merges chunk results pairwise.
/// Returns `None` when `n == 0`.
pub fn fold_chunks<A, F, M>(n: usize, fold: F, merge: M) -> Option<A>
where
    A: Send,
    F: Fn(Range<usize>) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    if n == 0 {
        return None;
    }
    let chunks = n.div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n);
    #[cfg(feature = "parallel")]
    let parts: Vec<A> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(|c| fold(range(c))).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<A> = (0..chunks).map(|c| fold(range(c))).collect();
    Some(tree_merge(parts, &merge))
}

fn tree_merge<A, M: Fn(A, A) -> A>(mut parts: Vec<A>, merge: &M) -> A {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().expect("non-empty")
}

/// Maps every index and collects in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_covers_every_index_once() {
        let total = fold_chunks(5000, |r| r.map(|i| i as u64).sum::<u64>(), |a, b| a + b).unwrap();
        assert_eq!(total, 5000 * 4999 / 2);
        assert!(fold_chunks(0, |_r| 0u64, |a, b| a + b).is_none());
    }
}
