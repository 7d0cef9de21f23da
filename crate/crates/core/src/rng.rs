//! Seed derivation.
//!
//! Every random stream is a ChaCha8 generator seeded from a 64-bit key. Keys
//! are derived from a base seed and a path of counters by chained SplitMix64
//! finalization, so sub-streams are independent of the order in which they
//! are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Human-readable description of the derivation scheme, recorded in run manifests.
pub const SCHEME: &str = "chacha8(splitmix64-chain(seed, path...))";

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `seed` and a counter path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the stream identified by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
