//! Deterministic random streams.
//!
//! Every simulated worker and every generator draws from its own ChaCha
//! stream keyed by `(master seed, domain, index)`, so results never depend
//! on the order in which events or sweep cells are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Separates the streams used for different purposes under one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Worker = 1,
    ChaoticProfile = 2,
    PeriodicProfile = 3,
    Participation = 4,
    Sampling = 5,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master_seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master_seed ^ mix(domain as u64)));
    rng.set_stream(index);
    rng
}

/// The stream owned by simulated worker `worker`.
pub fn worker_stream(master_seed: u64, worker: usize) -> StreamRng {
    stream(master_seed, Domain::Worker, worker as u64)
}
