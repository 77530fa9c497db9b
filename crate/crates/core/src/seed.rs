//! Seed derivation for independent random streams.
//!
//! Every random stream in the crate is driven by a [`ChaCha8Rng`] seeded with
//! a 64-bit value. Sub-seeds are derived from a master seed and a path of
//! stream indices with the SplitMix64 finalizer:
//!
//! ```text
//! s₀ = master
//! sₖ₊₁ = mix(sₖ ⊕ mix(indexₖ + 0x9E3779B97F4A7C15))
//! ```
//!
//! so `derive_seed(m, &[a, b])` names trial `b` of stream `a`. The rule is
//! stable across releases; changing it changes every output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &k| mix(s ^ mix(k.wrapping_add(GOLDEN))))
}

pub fn rng_from(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}
