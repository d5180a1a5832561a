//! Deterministic seed derivation. Every stochastic component owns a
//! `ChaCha8Rng`; independent streams are derived from a base seed and a path
//! of indices so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an index path.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &i| mix(acc ^ mix(i)))
}

/// Generator for `seed` on stream `stream`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Stream numbers used by the pipeline stages.
pub mod stream {
    pub const MEASURE: u64 = 1;
    pub const REJECT: u64 = 2;
    pub const DES: u64 = 3;
}
