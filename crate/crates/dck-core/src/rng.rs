use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Named random streams derived from one master seed.
///
/// Every consumer of randomness asks for its own stream, so enabling or
/// reordering one stage (e.g. batch prediction) cannot perturb the draws seen
/// by another (e.g. weight initialization). Streams are derived by hashing the
/// master seed together with the stream label, which also makes per-replicate
/// sub-policies cheap to derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    master_seed: u64,
}

/// Stream labels used by the pipeline.
pub mod stream {
    pub const SIMULATION: &str = "simulation";
    pub const TRAIN_SHUFFLE: &str = "train-shuffle";
    pub const WEIGHT_INIT: &str = "weight-init";
    pub const SAMPLING: &str = "sampling";
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        SeedPolicy { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// RNG for the named stream. The same (seed, label) pair always yields the
    /// same generator.
    pub fn stream(&self, label: &str) -> ChaCha12Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha12Rng::from_seed(seed)
    }

    /// Sub-policy for replicate `index`, independent of every other replicate.
    pub fn replicate(&self, index: u64) -> SeedPolicy {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update([1u8]);
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        SeedPolicy {
            master_seed: u64::from_le_bytes(bytes),
        }
    }
}
