//! Seeded random streams. The generator is ChaCha20 keyed by the seed, with
//! one stream per purpose so draws for different uses never overlap.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Name recorded in model files.
pub const GENERATOR: &str = "ChaCha20";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    HiddenParams = 0,
    Collocation = 1,
    Perturbation = 2,
}

pub struct SeededRng(ChaCha20Rng);

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream as u64);
        SeededRng(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}

/// Seed for sub-domain `id` derived from a base seed. Sub-domain 0 keeps the
/// base seed.
pub fn derive_seed(base: u64, id: usize) -> u64 {
    base.wrapping_add((id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
