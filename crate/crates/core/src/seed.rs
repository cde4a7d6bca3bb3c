//! Deterministic, splittable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::mix64;

/// Random generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Key of an independent random stream.
///
/// ChaCha is counter-based: the master seed selects the key and `stream_id`
/// selects one of 2^64 non-overlapping streams, so tasks can build their
/// generators in any order on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl Seed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Child stream keyed by `(self.stream_id, index)`.
    pub fn derive(&self, index: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: mix64(self.stream_id, index),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
