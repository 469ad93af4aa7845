//! Seed derivation. Every random draw in the crate starts from a `u64` seed
//! passed in by the caller; nothing reads the clock or OS entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a base seed with a sequence of indices into an independent seed.
pub fn derive(base: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(mix64(base), |acc, &i| mix64(acc ^ mix64(i)))
}

/// Stable 64-bit hash of a string (FNV-1a), for name-derived seeds.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
