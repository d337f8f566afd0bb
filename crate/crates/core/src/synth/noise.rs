//! Reproducible idle-channel noise generators for false-positive testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::signal::SampledSignal;

use super::gaussian_from;

/// Kinds of idle body-sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Stationary white noise at a given level (standard deviation).
    White,
    /// Repeating noise bursts: 50 ms of noise every 500 ms.
    Periodic,
    /// Silence with isolated high-amplitude transients at least 100 ms apart.
    Spike,
}

pub(crate) const PERIODIC_PERIOD_SEC: f64 = 0.5;
pub(crate) const PERIODIC_BURST_SEC: f64 = 0.05;

/// Generates `duration` seconds of the requested noise at 8 kHz. `level`
/// scales the amplitude (white/periodic: standard deviation; spike: transient
/// amplitude). Deterministic in `seed`.
pub fn make_noise(kind: NoiseKind, level: f64, duration_sec: f64, seed: u64) -> SampledSignal {
    let rate = 8000.0;
    let n = (duration_sec * rate).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let samples = match kind {
        NoiseKind::White => (0..n).map(|_| level * gaussian_from(&mut rng)).collect(),
        NoiseKind::Periodic => {
            let period = (PERIODIC_PERIOD_SEC * rate) as usize;
            let burst = (PERIODIC_BURST_SEC * rate) as usize;
            (0..n)
                .map(|i| {
                    if i % period < burst {
                        level * gaussian_from(&mut rng)
                    } else {
                        // Keep the stream position advancing so the pattern is
                        // stationary in distribution.
                        let _ = rng.random::<u32>();
                        0.0
                    }
                })
                .collect()
        }
        NoiseKind::Spike => {
            let mut out = vec![0.0f64; n];
            let mut pos = (0.05 * rate) as usize + (rng.random::<f64>() * 0.05 * rate) as usize;
            while pos + 2 < n {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                out[pos] = sign * level;
                out[pos + 1] = sign * level * 0.6;
                out[pos + 2] = sign * level * 0.25;
                let gap_sec = 0.1 + rng.random::<f64>() * 0.3;
                pos += (gap_sec * rate) as usize;
            }
            out
        }
    };
    SampledSignal::from_trusted(samples, rate)
}
