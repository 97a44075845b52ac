//! Reproducible per-realization random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed (expanded
//! with `SeedableRng::seed_from_u64`) and positioned on the ChaCha stream
//! selected by `stream_id`. Streams are therefore independent of each other
//! and of the order in which they are consumed, which is what makes parallel
//! ensembles bit-reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// First stream id reserved for bootstrap resampling. Realizations use ids
/// below this value.
pub const BOOTSTRAP_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct SeededRng {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
            spare: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform deviate on (0, 1]. Zero is excluded so `ln(u)` is finite.
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Two independent standard normal deviates via the Box-Muller transform.
    pub fn standard_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform_open_closed();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// One standard normal deviate; the second half of each Box-Muller pair
    /// is cached for the next call.
    pub fn standard_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.standard_gaussian_pair();
        self.spare = Some(b);
        a
    }
}
