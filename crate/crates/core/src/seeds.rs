//! Seed derivation for independent per-group random streams.
//!
//! A group's seed is
//!
//! ```text
//! mix(mix(mix(master) ^ cell_index) ^ group_index)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer, and the group's stream is
//! `ChaCha8Rng::seed_from_u64(seed)`. Both are fixed by this crate's
//! output contract: changing either changes every published result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GroupRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn group_seed(master: u64, cell_index: u64, group_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell_index) ^ group_index)
}

pub fn rng_from_seed(seed: u64) -> GroupRng {
    ChaCha8Rng::seed_from_u64(seed)
}
