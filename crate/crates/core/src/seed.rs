//! Hierarchical seed derivation.
//!
//! Every stochastic stage draws from its own stream derived from one root
//! seed, so any stage can be rerun in isolation and still see the same
//! numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream names used by the pipeline.
pub mod streams {
    pub const SPLIT: &str = "split";
    pub const CV: &str = "cv";
    pub const ENSEMBLE: &str = "ensemble";
    pub const SHUFFLE: &str = "label-shuffle";
}

/// Derives a child seed from `root` and a named stream.
pub fn derive(root: u64, stream: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(stream.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Derives a child seed from `root` and a pair of indices.
pub fn derive_indexed(root: u64, a: u64, b: u64) -> u64 {
    let mut x = splitmix64(root ^ 0x05EE_D0FC_1A55);
    x = splitmix64(x ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(x ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
