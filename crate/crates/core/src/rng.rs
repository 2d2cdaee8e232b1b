use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root seed of every seeded operation.
///
/// Each consumer asks for its own stream so that the random numbers one stage
/// draws never depend on how many another stage drew.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

/// Stream identifiers handed out to the individual modules.
pub mod stream {
    pub const SIMULATE: u64 = 1;
    pub const INIT: u64 = 2;
    pub const KMEANS: u64 = 3;
    pub const SPECTRAL: u64 = 4;
    pub const POWER: u64 = 5;
    pub const COHORT: u64 = 6;
}

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    /// Independent generator for `stream`.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Derives a child seed, e.g. one per subject or restart.
    pub fn child(self, index: u64) -> Seed {
        // splitmix64 finalizer
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}
