//! Matching engine that decides whether microphone speech physically
//! originated from the wearer of a body-conduction sensor.
//!
//! The pipeline pre-processes both channels, splits them into high-energy
//! segments driven by the body-sensor envelope, filters segments with
//! glottal-pulse and correlation rules, and classifies the cross-correlation
//! of the surviving signals with a max-margin model. A source-filter
//! synthesizer provides paired ground-truth corpora, and an attack bench
//! exercises reconstruction, replay and injection adversaries against the
//! pipeline.
//!
//! Heavy batch operations run data-parallel on rayon when the `parallel`
//! feature (default) is enabled; without it every entry point falls back to
//! the identical sequential path.

pub mod attack;
pub mod config;
pub mod decision;
pub mod error;
pub(crate) mod fft;
pub mod par;
pub mod pipeline;
pub mod pitch;
pub mod segment;
pub mod signal;
pub mod synth;
pub mod wav;

pub use config::PipelineConfig;
pub use error::{CoreError, Result};
pub use signal::SampledSignal;
