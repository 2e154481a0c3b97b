//! Reproducible random substreams.
//!
//! Every random draw in the pipeline is addressed by `(domain, row, replicate)`
//! under one master seed. The triple is packed with the master seed into a
//! ChaCha8 key, so each address owns an independent stream, and results never
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator used for every substream.
pub type Rng = ChaCha8Rng;

/// Separates the uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Graph = 1,
    Kernel = 2,
    Trajectory = 3,
    UniformStep = 4,
    Perturbation = 5,
    Reward = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// The substream for `(domain, row, replicate)`.
    pub fn stream(&self, domain: Domain, row: u64, replicate: u64) -> Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        key[16..24].copy_from_slice(&row.to_le_bytes());
        key[24..].copy_from_slice(&replicate.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// A derived master seed, e.g. for per-repetition experiments.
    pub fn child(&self, index: u64) -> SeedSpec {
        use rand::RngCore;
        SeedSpec::new(self.stream(Domain::Graph, u64::MAX, index).next_u64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let seed = SeedSpec::new(7);
        let a = seed.stream(Domain::Kernel, 3, 4).next_u64();
        assert_eq!(a, seed.stream(Domain::Kernel, 3, 4).next_u64());
        assert_ne!(a, seed.stream(Domain::Kernel, 4, 3).next_u64());
        assert_ne!(a, seed.stream(Domain::Reward, 3, 4).next_u64());
        assert_ne!(a, SeedSpec::new(8).stream(Domain::Kernel, 3, 4).next_u64());
    }
}
