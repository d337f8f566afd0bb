//! Error types shared across the matching engine.

use thiserror::Error;

/// Errors produced by the signal, pitch, segmentation and decision layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Highpass cutoff at or above the Nyquist frequency.
    #[error("invalid cutoff {cutoff_hz} Hz for sample rate {rate_hz} Hz")]
    InvalidCutoff { cutoff_hz: f64, rate_hz: f64 },

    /// An operation that needs signal energy received an all-zero signal.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(&'static str),

    /// Alignment produced an empty overlap.
    #[error("alignment failed: no overlap between the shifted signals")]
    AlignmentFailed,

    /// Envelope and signal cover different durations.
    #[error("envelope covers {envelope_sec:.3} s but signal covers {signal_sec:.3} s")]
    EnvelopeMismatch { envelope_sec: f64, signal_sec: f64 },

    /// Segment too short for one pitch analysis frame.
    #[error("segment of {got_sec:.4} s is shorter than one analysis frame ({need_sec:.4} s)")]
    SegmentTooShort { got_sec: f64, need_sec: f64 },

    /// Pitch distance requested on an empty pulse train.
    #[error("no glottal pulses available for pitch comparison")]
    NoPitch,

    /// Every segment was dropped by the per-segment rules.
    #[error("no surviving segments")]
    NoSurvivingSegments,

    /// Training set does not contain both classes.
    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(&'static str),

    /// Model file is corrupt, truncated or of an unknown version.
    #[error("model format error: {0}")]
    ModelFormatError(String),

    /// Synthesis configuration is out of range.
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),

    /// Signal shorter than one MFCC window.
    #[error("signal of {got} samples is shorter than the {need}-sample window")]
    SignalTooShort { got: usize, need: usize },

    /// Hoeffding bound requested with a threshold at or below the score mean.
    #[error("bound inapplicable: threshold {th} <= score mean {mean}")]
    BoundInapplicable { th: f64, mean: f64 },

    /// Pipeline input rejected before any processing.
    #[error("input error: {0}")]
    InputError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("wav error: {0}")]
    Wav(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
