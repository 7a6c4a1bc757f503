//! Seed derivation for the per-stage random streams.
//!
//! Every random draw in a run comes from a [`ChaCha8Rng`] seeded by mixing the
//! run seed with a fixed set of coordinates (second, generation, role, ...).
//! Streams never share state, so evaluation order and thread count cannot
//! change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream roles. The discriminants are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Shadow = 1,
    Init = 2,
    Inherit = 3,
    Variation = 4,
    Scenario = 5,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with each coordinate in order.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream(seed: u64, role: Role, coords: &[u64]) -> ChaCha8Rng {
    let mut all = Vec::with_capacity(coords.len() + 1);
    all.push(role as u64);
    all.extend_from_slice(coords);
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &all))
}
