//! Counter-based random streams.
//!
//! Every trial owns independent ChaCha8 streams addressed by `(seed, trial, purpose)`.
//! Draws inside a stream are positional (the ChaCha block counter), so a trial
//! can be replayed in isolation and trials can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Each purpose gets a disjoint ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Instances fed to an algorithm.
    Data = 0,
    /// Internal randomness of a randomized protocol or learner.
    Protocol = 1,
    /// Choice of the hidden coordinate / pair for a trial.
    Hidden = 2,
    /// Anything else (random test cases, channels, ...).
    Aux = 3,
}

const PURPOSES: u64 = 4;

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}
