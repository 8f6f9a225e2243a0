//! Seeded random streams.
//!
//! Every random draw in the crate comes from [`Xoshiro256PlusPlus`], seeded
//! through SplitMix64 (`SeedableRng::seed_from_u64`). Both generators are
//! fully specified, so a given seed reproduces the same stream on every
//! platform. Independent sub-streams (one per object, scene or experiment
//! stage) are derived with [`stream`], which mixes the parent seed and a
//! stream index through one SplitMix64 round.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as Rng;

/// Generator for a top-level seed.
pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive(seed, index))
}

/// Seed of sub-stream `index` of `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5bd1_e995)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
