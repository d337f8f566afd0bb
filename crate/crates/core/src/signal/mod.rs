//! Time-domain DSP primitives for the pre-processing stage: filtering,
//! resampling, spike clipping, normalization, alignment, energy envelopes and
//! normalized cross-correlation.

mod envelope;
mod filter;
mod resample;
mod xcorr;

pub use envelope::{apply_envelope, energy_envelope, EnergyEnvelope, EnvelopeParams};
pub use filter::{filter_same, highpass_filter, lowpass_fir_taps, tap_response_at};
pub use resample::resample;
pub use xcorr::{align, xcorr_normalized, CrossCorrelation};

use crate::error::{CoreError, Result};

/// A mono signal: real amplitudes plus the rate they were sampled at.
///
/// Samples are dimensionless and nominally in `[-1, 1]` once normalized.
/// Constructors reject non-finite samples and non-positive rates so the rest
/// of the engine can assume both.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    rate_hz: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(CoreError::InputError(format!(
                "sample rate must be positive and finite, got {rate_hz}"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(CoreError::InputError(
                "signal contains NaN or infinite samples".into(),
            ));
        }
        Ok(Self { samples, rate_hz })
    }

    /// Builds without the finiteness scan. For internal stages whose outputs
    /// are finite by construction.
    pub(crate) fn from_trusted(samples: Vec<f64>, rate_hz: f64) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self { samples, rate_hz }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_sec(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Sum of squared amplitudes.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn slice(&self, start: usize, end: usize) -> SampledSignal {
        SampledSignal::from_trusted(self.samples[start..end].to_vec(), self.rate_hz)
    }
}

/// Scales the signal so its maximum magnitude is exactly one.
///
/// Errors with [`CoreError::DegenerateSignal`] on all-zero input.
pub fn normalize_unity(signal: &SampledSignal) -> Result<SampledSignal> {
    let peak = signal
        .samples
        .iter()
        .fold(0.0f64, |acc, s| acc.max(s.abs()));
    if peak == 0.0 {
        return Err(CoreError::DegenerateSignal("cannot normalize all-zero signal"));
    }
    let out = signal.samples.iter().map(|s| s / peak).collect();
    Ok(SampledSignal::from_trusted(out, signal.rate_hz))
}

/// Clamps samples whose instantaneous energy exceeds the running-window
/// mean-plus-`k_sigma`-standard-deviations energy bound, preserving sign.
///
/// The pass repeats until the output satisfies its own running-window bound
/// (a single pass leaves a shrunk spike that still towers over the rebuilt
/// statistics), capped at a fixed number of sweeps.
pub fn clip_spikes(signal: &SampledSignal, window_len: usize, k_sigma: f64) -> SampledSignal {
    assert!(window_len >= 8, "spike window must cover at least 8 samples");
    const MAX_SWEEPS: usize = 64;

    let mut cur = signal.samples.clone();
    for _ in 0..MAX_SWEEPS {
        if !clip_pass(&mut cur, window_len, k_sigma) {
            break;
        }
    }
    SampledSignal::from_trusted(cur, signal.rate_hz)
}

/// One clamping sweep. Returns true when any sample was changed.
fn clip_pass(samples: &mut [f64], window_len: usize, k_sigma: f64) -> bool {
    let n = samples.len();
    if n == 0 {
        return false;
    }
    // Prefix sums of energy and squared energy for O(1) window statistics.
    let mut pe = vec![0.0f64; n + 1];
    let mut pe2 = vec![0.0f64; n + 1];
    for (i, &s) in samples.iter().enumerate() {
        let e = s * s;
        pe[i + 1] = pe[i] + e;
        pe2[i + 1] = pe2[i] + e * e;
    }
    let half = window_len / 2;
    let mut changed = false;
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let count = (hi - lo) as f64;
        let mean = (pe[hi] - pe[lo]) / count;
        let var = ((pe2[hi] - pe2[lo]) / count - mean * mean).max(0.0);
        let bound = mean + k_sigma * var.sqrt();
        let e = samples[i] * samples[i];
        if e > bound {
            samples[i] = samples[i].signum() * bound.max(0.0).sqrt();
            changed = true;
        }
    }
    changed
}
