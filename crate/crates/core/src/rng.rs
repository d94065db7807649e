//! Seeded RNG substreams.
//!
//! Every stochastic component draws from a ChaCha stream derived from a master
//! seed plus a role tag, so concurrent components never share state and whole
//! experiments replay bit-identically from their configuration.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; decorrelates structured tag inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a seed and a list of tags into one substream key.
pub fn stream_key(seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix(seed);
    for &t in tags {
        h = mix(h ^ t);
    }
    h
}

/// A ChaCha RNG keyed by `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(stream_key(seed, tags))
}

/// One uniform value in `[0, 1)` keyed by `(seed, tags...)`.
///
/// Used for per-node tie-breaking noise where a full RNG per draw would be
/// wasteful: the key is hashed, not sequential, so fresh draws for the same
/// node at different timesteps stay independent.
pub fn keyed_uniform(seed: u64, tags: &[u64]) -> f64 {
    let mut rng = substream(seed, tags);
    rng.gen::<f64>()
}
