//! Monte-Carlo check of the exponential false-positive decay bound: for
//! bounded i.i.d. segment scores with mean below the threshold, the chance
//! that the mean of n scores clears the threshold is at most
//! exp(-2 n (th - E)^2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CoreError, Result};
use crate::par;

/// A bounded score distribution with a known mean.
pub trait ScoreDistribution: Sync {
    /// Draws one score in [0, 1].
    fn sample(&self, rng: &mut ChaCha20Rng) -> f64;
    /// Exact mean of the distribution.
    fn mean(&self) -> f64;
}

/// Uniform scores on [lo, hi].
#[derive(Debug, Clone, Copy)]
pub struct UniformScores {
    pub lo: f64,
    pub hi: f64,
}

impl UniformScores {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi);
        Self { lo, hi }
    }
}

impl ScoreDistribution for UniformScores {
    fn sample(&self, rng: &mut ChaCha20Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }

    fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// One row of the decay table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FpDecayRow {
    pub n: usize,
    pub empirical_fp: f64,
    pub hoeffding_bound: f64,
    /// Binomial standard error of the empirical estimate.
    pub mc_stderr: f64,
}

/// Estimates the command-level false-positive rate for each segment count in
/// `n_values` and tabulates it against the analytic bound. Deterministic in
/// `seed`, independent of the level of parallelism.
pub fn fp_decay_montecarlo<D: ScoreDistribution>(
    dist: &D,
    th: f64,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<FpDecayRow>> {
    let mean = dist.mean();
    if th <= mean {
        return Err(CoreError::BoundInapplicable { th, mean });
    }
    let rows = n_values
        .iter()
        .map(|&n| {
            let hits: usize = par::map_indices(trials, |trial| {
                let mut rng =
                    ChaCha20Rng::seed_from_u64(seed ^ (n as u64) << 32 ^ trial as u64);
                let sum: f64 = (0..n).map(|_| dist.sample(&mut rng)).sum();
                usize::from(sum / n as f64 > th)
            })
            .into_iter()
            .sum();
            let p = hits as f64 / trials as f64;
            FpDecayRow {
                n,
                empirical_fp: p,
                hoeffding_bound: (-2.0 * n as f64 * (th - mean) * (th - mean)).exp(),
                mc_stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            }
        })
        .collect();
    Ok(rows)
}
