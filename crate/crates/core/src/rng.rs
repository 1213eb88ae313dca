//! Seeded, splittable randomness.
//!
//! A [`SeededRng`] is only a key. Generators are created on demand with
//! [`SeededRng::stream`], which hashes `(seed, label, index)` into a fresh
//! ChaCha8 seed. Streams never share state, so a sampler that draws point `i`
//! from `stream("uniform", i)` produces the same output sequentially or in
//! parallel, and adding a new labelled consumer leaves existing ones alone.
//!
//! Key derivation: `k = splitmix(splitmix(splitmix(seed) ^ fnv1a(label)) ^ index)`,
//! then `ChaCha8Rng::seed_from_u64(k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeededRng {
    seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for `(label, index)`.
    pub fn stream(&self, label: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(label, index))
    }

    /// Child key for nested consumers, e.g. one per scene surface.
    pub fn child(&self, label: &str, index: u64) -> SeededRng {
        SeededRng::new(self.derive(label, index))
    }

    fn derive(&self, label: &str, index: u64) -> u64 {
        splitmix64(splitmix64(splitmix64(self.seed) ^ fnv1a(label)) ^ index)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
