//! Seed derivation for reproducible substreams.
//!
//! Every random consumer (circuit generation, shot sampling per scale factor,
//! bootstrap resamples) gets its own ChaCha stream keyed by a mixed seed, so
//! results do not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed as `seed ^ hash(index)`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    seed ^ mix64(index)
}

/// Derives a child seed from a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |acc, &i| mix64(substream_seed(acc, i)))
}

/// Domain tags separating the streams used for different purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Circuit = 1,
    Shots = 2,
    Bootstrap = 3,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for a tagged stream: `stream` selects the ChaCha stream id.
pub fn tagged_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
