//! Seeded random streams.
//!
//! All randomness flows through ChaCha8 generators. A `(seed, stream)` pair
//! names one independent stream; instance `i` of a suite, or split `i` of a
//! pool, uses stream `i` of the master seed. ChaCha is counter based, so
//! streams are reproducible across platforms and thread counts.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for item `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream(master, index).next_u64()
}
