//! Threshold and hyperparameter configuration for the whole pipeline, plus a
//! stable digest so every report can state exactly which knobs produced it.

use serde::{Deserialize, Serialize};

/// Pre-processing stage knobs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Highpass cutoff applied to the body-sensor channel, Hz.
    pub highpass_cutoff_hz: f64,
    /// Common working rate both channels are resampled to, Hz.
    pub target_rate_hz: f64,
    /// Running-statistics window for spike clipping, seconds.
    pub spike_window_sec: f64,
    /// Clipping bound in standard deviations above the running mean energy.
    pub spike_k_sigma: f64,
    /// Envelope frame length, seconds.
    pub envelope_frame_sec: f64,
    /// Fraction of the loudest frame a frame must exceed to be active.
    pub envelope_threshold_frac: f64,
    /// Absolute mean-square floor for envelope activity.
    pub envelope_noise_floor: f64,
    /// Envelope gaps shorter than this are closed, seconds.
    pub envelope_close_gap_sec: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            highpass_cutoff_hz: 100.0,
            target_rate_hz: 8000.0,
            spike_window_sec: 0.5,
            spike_k_sigma: 6.0,
            envelope_frame_sec: 0.010,
            envelope_threshold_frac: 0.05,
            envelope_noise_floor: 1e-3,
            envelope_close_gap_sec: 0.020,
        }
    }
}

/// Pitch-extraction knobs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PitchConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Autocorrelation analysis frame, seconds.
    pub frame_sec: f64,
    /// Hop between analysis frames, seconds.
    pub hop_sec: f64,
    /// Corrected-autocorrelation peak a frame must exceed to count as voiced.
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min_hz: 80.0,
            f0_max_hz: 333.0,
            frame_sec: 0.040,
            hop_sec: 0.010,
            voicing_threshold: 0.45,
        }
    }
}

/// Per-segment filtering rule thresholds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RuleConfig {
    /// Segments shorter than this are dropped, seconds.
    pub min_segment_sec: f64,
    /// Minimum duration of the longest continuous pulse run, seconds.
    pub min_pulse_run_sec: f64,
    /// Acceptable mean glottal cycle range, seconds.
    pub cycle_min_sec: f64,
    pub cycle_max_sec: f64,
    /// Maximum relative pitch distance between the channels.
    pub pitch_distance_max: f64,
    /// Segments whose max |cross-correlation| falls inside
    /// [-corr_gate, corr_gate] are discarded.
    pub corr_gate: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            min_segment_sec: 0.020,
            min_pulse_run_sec: 0.020,
            cycle_min_sec: 0.003,
            cycle_max_sec: 0.0125,
            pitch_distance_max: 0.25,
            corr_gate: 0.25,
        }
    }
}

/// How the final verdict is produced from the feature vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DecisionMode {
    /// Trained max-margin classifier (default path).
    Classifier,
    /// Plain threshold on the correlation peak, kept for analysis work.
    Threshold { th: f64 },
}

/// Everything the matching pipeline needs to know.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub pitch: PitchConfig,
    pub rules: RuleConfig,
    pub decision: DecisionConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DecisionConfig {
    pub mode: DecisionMode,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            mode: DecisionMode::Classifier,
        }
    }
}

impl PipelineConfig {
    /// Stable FNV-1a digest of the serialized configuration. Reports embed it
    /// so runs can be audited for threshold drift.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }
}

/// SMO training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Consecutive full sweeps without changes before stopping.
    pub max_passes: usize,
    /// Hard cap on full sweeps.
    pub max_sweeps: usize,
    /// RNG seed for partner selection.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 10,
            max_sweeps: 400,
            seed: 0x5eed,
        }
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = PipelineConfig::default();
        let b = PipelineConfig::default();
        assert_eq!(a.digest(), b.digest());
        let mut c = PipelineConfig::default();
        c.rules.corr_gate = 0.4;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = PipelineConfig::default();
        cfg.decision.mode = DecisionMode::Threshold { th: 0.4 };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
