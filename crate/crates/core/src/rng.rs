//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed. Independent streams (trials,
//! restarts) use `seed + index` with wrapping addition.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type Rng = Pcg64Mcg;

pub fn seeded(seed: u64) -> Rng {
    Pcg64Mcg::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> Rng {
    seeded(seed.wrapping_add(index))
}
