//! Reproducible homodyne outcomes by inverse-CDF sampling.
//!
//! Every uniform variate is a pure function of `(campaign_seed, trial_index,
//! draw_index)`: the campaign seed keys a ChaCha8 generator, the trial index
//! selects its stream and the draw index its position within the stream.
//! Trials can therefore be evaluated in any order or in parallel.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::homodyne::TabulatedDensity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SeedSpec {
    pub campaign_seed: u64,
    pub trial_index: u64,
    pub draw_index: u64,
}

impl SeedSpec {
    pub fn new(campaign_seed: u64, trial_index: u64) -> Self {
        Self {
            campaign_seed,
            trial_index,
            draw_index: 0,
        }
    }

    fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.campaign_seed);
        rng.set_stream(self.trial_index);
        // one u64 per draw = two 32-bit words
        rng.set_word_pos(2 * self.draw_index as u128);
        rng
    }
}

#[inline]
fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `count` uniform variates in `(0, 1)` starting at `seed.draw_index`.
pub fn uniforms(seed: SeedSpec, count: usize) -> Vec<f64> {
    let mut rng = seed.generator();
    (0..count).map(|_| to_open_unit(rng.next_u64())).collect()
}

/// Inverse of the piecewise-linear tabulated CDF.
pub fn inverse_cdf(density: &TabulatedDensity, u: f64) -> f64 {
    let cdf = density.cdf();
    let grid = density.grid();
    let n = cdf.len();
    let k = cdf.partition_point(|c| *c <= u).clamp(1, n - 1);
    let (c0, c1) = (cdf[k - 1], cdf[k]);
    if c1 <= c0 {
        return grid[k - 1];
    }
    let t = ((u - c0) / (c1 - c0)).clamp(0.0, 1.0);
    grid[k - 1] + t * (grid[k] - grid[k - 1])
}

/// Draws `count` outcomes from `density`.
pub fn sample(density: &TabulatedDensity, seed: SeedSpec, count: usize) -> Vec<f64> {
    uniforms(seed, count)
        .into_iter()
        .map(|u| inverse_cdf(density, u))
        .collect()
}
