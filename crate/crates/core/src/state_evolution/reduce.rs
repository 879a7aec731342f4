//! Schedule-independent parallel sums.
//!
//! Work is split into fixed-size chunks; partial sums are collected in chunk
//! order and folded sequentially, so the result is bit-identical for any
//! thread count.

use std::ops::Range;

use rayon::prelude::*;

/// Coordinates per reduction chunk.
pub const REDUCE_CHUNK: usize = 8192;

/// Sum `K` quantities over `0..len`, with `partial` producing the sums over one chunk.
pub fn coordinate_sums<const K: usize, F>(len: usize, partial: F) -> [f64; K]
where
    F: Fn(Range<usize>) -> [f64; K] + Sync,
{
    let chunks = len.div_ceil(REDUCE_CHUNK);
    let parts: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| partial(c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(len)))
        .collect();
    let mut total = [0.0; K];
    for p in parts {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_of_thread_count() {
        let data: Vec<f64> = (0..100_003).map(|i| ((i as f64) * 0.37).sin()).collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| coordinate_sums(data.len(), |r| [data[r].iter().sum::<f64>()]))
        };
        assert_eq!(run(1)[0].to_bits(), run(3)[0].to_bits());
        let direct: f64 = data.iter().sum();
        assert!((run(2)[0] - direct).abs() < 1e-9);
    }
}
