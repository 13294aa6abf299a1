//! Stable seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a 64-bit seed
//! derived here, so results never depend on thread scheduling or on the
//! standard library's (unstable) hasher.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed. Order matters.
pub fn derive(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seed for one Monte Carlo trial: `hash(master_seed, axis_value, trial_index)`.
pub fn trial_seed(master_seed: u64, axis_value: f64, trial_index: u64) -> u64 {
    derive(&[master_seed, axis_value.to_bits(), trial_index])
}

/// Named sub-stream of a seed, e.g. `stream(seed, b"noise")`.
pub fn stream(seed: u64, tag: &[u8]) -> u64 {
    let mut acc = seed;
    for chunk in tag.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        acc = derive(&[acc, u64::from_le_bytes(word)]);
    }
    acc
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
