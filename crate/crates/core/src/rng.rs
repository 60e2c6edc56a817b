//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from ChaCha8, a counter-based
//! generator: a 64-bit seed selects the key and a 64-bit stream id selects an
//! independent sequence, so work split across images (stream = image index)
//! stays reproducible regardless of scheduling. Normal variates use the
//! Box-Muller transform over `f64` uniforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifies the generator/transform pair for provenance records.
pub const GENERATOR_NAME: &str = "chacha8+box-muller/v1";

/// Deterministic generator for `(seed, stream)`.
pub fn generator(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal variates via Box-Muller, consuming two uniforms per pair.
pub struct Normal<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> Normal<R> {
    pub fn new(rng: R) -> Self {
        Normal { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(radius * theta.sin());
        radius * theta.cos()
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Fisher-Yates shuffle driven by `rng`.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
