//! Counter-based seed streams.
//!
//! Every random draw in a sample comes from a ChaCha generator whose seed is
//! a pure function of `(master_seed, sample_index, stream)`, so any sample
//! can be replayed in isolation and the result does not depend on which
//! worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the independent draws inside one sample.
pub mod stream {
    pub const TOPOLOGY: u64 = 1;
    pub const MIXING: u64 = 2;
    pub const PORTFOLIO: u64 = 3;
    pub const SHOCK: u64 = 4;
    pub const LAYER_SHADOW: u64 = 5;
    pub const LAYER_REGULATED: u64 = 6;
    pub const INTER_LAYER: u64 = 7;
    pub const CALIBRATION: u64 = 8;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of counters into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(GOLDEN))))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    rng_from(derive_seed(master, path))
}
