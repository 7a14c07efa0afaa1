//! Reproducible Brownian increments.
//!
//! Every `(master_seed, replicate, coordinate)` triple owns its own ChaCha8
//! stream: the key comes from `master_seed`, the 64-bit stream id is
//! `2 * replicate + coordinate`. Paths are therefore independent of the order
//! or thread on which replicates are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Pair of independent Wiener-increment generators for one replicate.
#[derive(Debug, Clone)]
pub struct BrownianStreams {
    w1: ChaCha8Rng,
    w2: ChaCha8Rng,
}

fn stream(master_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

impl BrownianStreams {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        assert!(replicate < 1 << 63, "replicate index out of range");
        Self { w1: stream(master_seed, 2 * replicate), w2: stream(master_seed, 2 * replicate + 1) }
    }

    /// Standard normal pair.
    pub fn next_normals(&mut self) -> [f64; 2] {
        [StandardNormal.sample(&mut self.w1), StandardNormal.sample(&mut self.w2)]
    }

    /// Increments `(dW1, dW2)` over a step of length `dt`.
    pub fn next_increments(&mut self, dt: f64) -> [f64; 2] {
        let s = dt.sqrt();
        let [z1, z2] = self.next_normals();
        [s * z1, s * z2]
    }
}
