//! Deterministic random streams.
//!
//! Every stochastic routine takes a `(seed, stream)` pair. Monte Carlo loops
//! are cut into fixed-size chunks and chunk `c` of a job tagged `tag` draws
//! from stream `(tag << 32) | c`, so results do not depend on how rayon
//! schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type LabRng = ChaCha8Rng;

/// Samples per chunk in parallel Monte Carlo loops.
pub const CHUNK: usize = 1 << 14;

pub fn stream_rng(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for chunk `chunk` of a job tagged `tag`.
pub fn stream_id(tag: u32, chunk: u64) -> u64 {
    ((tag as u64) << 32) | (chunk & 0xffff_ffff)
}

/// Runs `work(rng, len)` over `ceil(n / CHUNK)` chunks and returns the
/// per-chunk results in chunk order.
pub fn chunked<T, F>(n: usize, seed: u64, tag: u32, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut LabRng, usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(seed, stream_id(tag, c as u64));
            work(&mut rng, len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream_is_identical() {
        let a: Vec<u64> = (0..8).map(|_| stream_rng(3, 9).random()).collect();
        let b: Vec<u64> = (0..8).map(|_| stream_rng(3, 9).random()).collect();
        assert_eq!(a, b);
        let mut r1 = stream_rng(3, 9);
        let mut r2 = stream_rng(3, 10);
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn chunking_covers_all_samples_in_order() {
        let lens = chunked(3 * CHUNK + 5, 1, 0, |_, len| len);
        assert_eq!(lens, vec![CHUNK, CHUNK, CHUNK, 5]);
        let a = chunked(2 * CHUNK, 11, 4, |rng, _| rng.random::<u64>());
        let b = chunked(2 * CHUNK, 11, 4, |rng, _| rng.random::<u64>());
        assert_eq!(a, b);
    }
}
