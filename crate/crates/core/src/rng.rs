//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a stable hash of the run seed and a chain of indices, so work
//! units can run in any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream index.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn derive2(seed: u64, a: u64, b: u64) -> u64 {
    derive(derive(seed, a), b)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
