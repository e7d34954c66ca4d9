//! Seeded randomness.
//!
//! Every stochastic routine takes either an explicit `u64` seed or a
//! `&mut ChaCha8Rng`. Child seeds are derived deterministically from a parent
//! seed and a tag so independent jobs never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for sub-job `tag` of the job seeded by `parent`.
pub fn child_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Folds a path of tags into a seed, e.g. `(repetition, checkpoint, lambda)`.
pub fn seed_path(root: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(root, |s, &t| child_seed(s, t))
}
