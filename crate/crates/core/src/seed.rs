//! Seed derivation for independent trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function. A bijection on `u64`.
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from `master`.
///
/// `mix(master, ·)` is a bijection for every `master`, so distinct indices never
/// collide. The definition is frozen: changing it changes every experiment CSV.
pub fn mix(master: u64, index: u64) -> u64 {
    finalize(master.wrapping_add(finalize(index.wrapping_add(GOLDEN))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
