//! Counter-based seed splitting.
//!
//! Every random stream is seeded by `derive(master, stream, index)`, so a
//! trial's draws depend only on the master seed, the stream tag and the trial
//! index, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;

pub const STREAM_NULL: u64 = 1;
pub const STREAM_ALT: u64 = 2;
pub const STREAM_CODEBOOK: u64 = 3;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(master ^ stream.wrapping_mul(GOLDEN)).wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Generator for one trial.
pub fn trial_rng(master: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, trial))
}

/// Generator for codeword `m` of the codebook with seed `seed`.
pub fn codeword_rng(seed: u64, m: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive(seed, STREAM_CODEBOOK, m))
}
