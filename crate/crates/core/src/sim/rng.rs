//! Named random sub-streams.
//!
//! Each stream is seeded from `sha256(name || seed)`, so a module drawing
//! from its own stream never shifts another module's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha12Rng;

pub fn stream_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64, name: &str) -> StreamRng {
    ChaCha12Rng::seed_from_u64(stream_seed(seed, name))
}

pub const DEMAND_STREAM: &str = "demand";
pub const CHOICE_STREAM: &str = "mode-choice";
