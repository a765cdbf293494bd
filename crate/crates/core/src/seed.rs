//! Deterministic seed derivation so every random stream in a run is a pure
//! function of the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags; one per independent consumer of randomness.
pub mod stream {
    pub const TRAFFIC: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const AGENT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const OMEGA: u64 = 5;
    pub const EVAL_TRAFFIC: u64 = 6;
    pub const EVAL_AGENT: u64 = 7;
    pub const BOOTSTRAP: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ tag.rotate_left(32)) ^ index)
}

pub fn rng(base: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tag, index))
}
