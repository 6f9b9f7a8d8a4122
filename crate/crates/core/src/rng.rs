//! Seeded random streams. Every random choice in the crate goes through
//! [`stream`] so that runs are reproducible from `(seed, purpose)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in report metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), key from seed_from_u64(seed), stream id per purpose";

/// Stream ids keep independent consumers of one seed from sharing draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Demands = 1,
    Weights = 2,
    Perturbation = 3,
    RandomAssignment = 4,
    TinyInstances = 5,
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
