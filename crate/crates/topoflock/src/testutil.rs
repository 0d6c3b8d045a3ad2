//! Small seeded-randomness helpers for tests and Monte Carlo checks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Uniform sample in [0, 1).
pub fn unit(r: &mut StdRng) -> f64 {
    r.random::<f64>()
}

/// Uniform sample in [lo, hi).
pub fn range(r: &mut StdRng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}
