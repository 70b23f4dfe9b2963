//! Seedable random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 seeded with
//! `seed_from_u64(seed)` and then moved onto a fixed stream id, so that
//! independent consumers (lattice placement, velocities, KMC selection) never
//! share a sequence and a run is reproducible byte for byte from its seed.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SimRng;

/// Stream used to place charges on KMC lattice sites.
pub const STREAM_PLACEMENT: u64 = 0;
/// Stream used for initial MD velocities.
pub const STREAM_VELOCITIES: u64 = 1;
/// Stream used for KMC move selection and residence times.
pub const STREAM_SELECTION: u64 = 2;
/// Stream used for random particle positions (tests, benchmarks).
pub const STREAM_POSITIONS: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
