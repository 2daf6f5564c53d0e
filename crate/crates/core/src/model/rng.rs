use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Independent stream identifiers.
pub mod stream {
    pub const MOBILITY: u64 = 1;
    pub const FADING_V2I: u64 = 2;
    pub const FADING_V2V: u64 = 3;
    pub const CLUSTERING: u64 = 4;
    pub const INSTANCES: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
}

/// A seed plus a stream id; equal pairs reproduce equal draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Deterministic seed derived from a base seed and a sequence of indices.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
