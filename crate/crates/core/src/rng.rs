//! Seed derivation.
//!
//! Every stochastic task (an episode, a lower-level solve, a node split)
//! draws from its own stream, derived from the master seed and a stable
//! task identifier. Parallel and serial execution therefore consume
//! identical random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix64(mix64(master) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn task_rng(master: u64, stream: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

/// FNV-1a over a byte stream, used to key tasks by content.
pub fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
