//! Reproducible random streams.
//!
//! A [`RngStream`] is a `(seed, stream_id)` pair. Both words form the ChaCha8
//! key, and the ChaCha nonce selects a sub-stream, so Monte Carlo trial `t`
//! always draws from sub-stream `t` no matter which thread runs it.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Source for sub-stream 0 of this stream.
    pub fn source(&self) -> ComplexGaussian {
        self.substream(0)
    }

    /// Source for sub-stream `index`; used to key Monte Carlo trials.
    pub fn substream(&self, index: u64) -> ComplexGaussian {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        ComplexGaussian { rng }
    }

    /// Derives an independent child stream, e.g. separate calibration and
    /// detection pools inside one experiment.
    pub fn fork(&self, label: u64) -> RngStream {
        let mixed = splitmix64(self.seed ^ splitmix64(self.stream_id ^ 0x9E37_79B9_7F4A_7C15));
        RngStream::new(mixed, label)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly-symmetric unit-variance complex Gaussian generator
/// (Box–Muller over a ChaCha8 uniform stream).
#[derive(Debug, Clone)]
pub struct ComplexGaussian {
    rng: ChaCha8Rng,
}

impl ComplexGaussian {
    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// One draw with E|z|^2 = 1; real and imaginary parts each have variance 1/2.
    #[inline]
    pub fn sample(&mut self) -> Complex64 {
        let radius = (-self.uniform().ln()).sqrt();
        let (sin, cos) = (TAU * self.uniform()).sin_cos();
        Complex64::new(radius * cos, radius * sin)
    }

    pub fn fill(&mut self, out: &mut [Complex64]) {
        for z in out.iter_mut() {
            *z = self.sample();
        }
    }
}
