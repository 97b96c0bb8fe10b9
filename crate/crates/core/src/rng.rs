//! Seeded random streams.
//!
//! Every run derives independent ChaCha8 streams from its seed, one per
//! consumer, so that adding draws in one place never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Scenario sampling, pool updates and resampling.
    Pool = 1,
    /// Move-target selection in local search.
    Moves = 2,
    /// Metropolis acceptance draws.
    Annealing = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
