//! Named random streams derived from one experiment seed.
//!
//! Each consumer (parameter init, shuffling, synthetic data) draws from its own
//! stream, so adding draws to one never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const INIT_STREAM: &str = "init";
pub const SHUFFLE_STREAM: &str = "shuffle";

pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"mtal-stream\0");
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
