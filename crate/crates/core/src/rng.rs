//! Platform-stable seed derivation.
//!
//! Every random draw in the simulator comes from a [`ChaCha8Rng`] seeded with
//! a 64-bit value derived from the master seed through [`derive_seed`]. The
//! mixing function is SplitMix64 and string keys are folded with 64-bit
//! FNV-1a, so derived seeds are identical on every platform and independent
//! of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage identifiers for noise substreams inside one frame.
pub mod stage {
    pub const PAYLOAD: u64 = 1;
    pub const ASE: u64 = 2;
    pub const TIA: u64 = 3;
    pub const PROBE: u64 = 4;
    pub const AWGN: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of integer labels.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// 64-bit FNV-1a of a string key.
pub fn key_hash(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
