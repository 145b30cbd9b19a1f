//! Seeded random streams.
//!
//! A run has one master seed. Each consumer gets its own ChaCha stream id so
//! that, for example, changing the policy does not shift the population draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Population,
    Policy,
    Outcomes,
    Replication(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Population => 1,
            Stream::Policy => 2,
            Stream::Outcomes => 3,
            Stream::Replication(i) => 1_000 + i,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// Seed of replication `index`, drawn from its own stream.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, Stream::Replication(index)).next_u64()
}
