//! Portable random streams.
//!
//! Each stream is ChaCha20 in the original 64-bit-counter, 64-bit-nonce layout,
//! keyed by the seed written little-endian into the first 8 key bytes (the
//! remaining 24 bytes zero), with the stream id as the nonce. Outputs are the
//! keystream words read as little-endian `u64`s. Uniforms take the top 53
//! bits of each 64-bit output; normals use the cosine branch of Box-Muller on two
//! consecutive uniforms.

use std::f64::consts::PI;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Stream {
    rng: ChaCha20Rng,
}

impl Stream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream_id);
        Stream { rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}
