//! Stable seed derivation.
//!
//! Every random draw in the crate is made from a `ChaCha8Rng` seeded with a
//! value derived here, so results never depend on scheduling or on a shared
//! generator. The hash is FNV-1a followed by a SplitMix64 finalizer; both are
//! fixed forever so seeds stay stable across toolchains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Seed for one ELM training inside a sweep.
pub fn training_seed(base: u64, dataset: &str, hidden: usize, repetition: usize) -> u64 {
    mix(&[base, fnv1a(dataset.as_bytes()), hidden as u64, repetition as u64])
}

/// Seed for the train/test split of a dataset. `repetition` is `None` when a
/// single split is shared by the whole sweep.
pub fn split_seed(base: u64, dataset: &str, repetition: Option<usize>) -> u64 {
    let tag = fnv1a(b"split");
    match repetition {
        None => mix(&[base, fnv1a(dataset.as_bytes()), tag]),
        Some(r) => mix(&[base, fnv1a(dataset.as_bytes()), tag, r as u64]),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hex digest of a byte string, used for config hashes.
pub fn hex_digest(bytes: &[u8]) -> String {
    let a = fnv1a(bytes);
    let b = splitmix64(a ^ bytes.len() as u64);
    format!("{a:016x}{b:016x}")
}
