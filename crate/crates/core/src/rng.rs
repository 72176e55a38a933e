//! Named random streams derived from one master seed.
//!
//! Each `(trial, purpose)` pair gets its own ChaCha stream, so the sampler,
//! the mutator and the selection tie-breaker can be replayed independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Target = 0,
    Sample = 1,
    Mutation = 2,
    Selection = 3,
    Instance = 4,
}

const PURPOSES: u64 = 8;

pub fn stream(master_seed: u64, trial: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}
