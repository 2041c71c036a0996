//! Deterministic seed derivation for chunked parallel sampling.
//!
//! Every Monte-Carlo routine in this crate partitions its sample budget into
//! fixed-size chunks and derives an independent RNG seed per chunk from the
//! user seed and the chunk's coordinates. Results are then reduced in chunk
//! order, so estimates are bit-identical regardless of how many worker
//! threads execute the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a good avalanche mix for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a stream path.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x6a09_e667_f3bc_c909);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p));
    }
    state
}

/// RNG for one chunk of one named stream.
pub fn chunk_rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Splits `total` items into `(start, len)` chunks of at most `chunk_size`.
pub fn chunks(total: usize, chunk_size: usize) -> Vec<(usize, usize)> {
    assert!(chunk_size > 0);
    let mut out = Vec::with_capacity(total.div_ceil(chunk_size));
    let mut start = 0;
    while start < total {
        let len = chunk_size.min(total - start);
        out.push((start, len));
        start += len;
    }
    out
}
