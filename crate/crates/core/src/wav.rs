//! Mono WAV reading and writing (16-bit PCM and 32-bit float).

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::signal::SampledSignal;

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Reads a mono WAV file. 16-bit samples map to [-1, 1] via division by
/// 32768; float samples pass through.
pub fn read_wav(path: &Path) -> Result<SampledSignal> {
    let mut reader = hound::WavReader::open(path).map_err(|e| CoreError::Wav(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CoreError::Wav(format!(
            "expected mono audio, got {} channels",
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::Wav(e.to_string()))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::Wav(e.to_string()))?,
        (fmt, bits) => {
            return Err(CoreError::Wav(format!(
                "unsupported sample format {fmt:?}/{bits} bits"
            )))
        }
    };
    SampledSignal::new(samples, spec.sample_rate as f64)
}

/// Writes a mono WAV file in the requested encoding. PCM samples are clamped
/// to [-1, 1] before quantization.
pub fn write_wav(path: &Path, signal: &SampledSignal, encoding: WavEncoding) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.rate_hz().round() as u32,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| CoreError::Wav(e.to_string()))?;
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in signal.samples() {
                let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
                writer
                    .write_sample(q)
                    .map_err(|e| CoreError::Wav(e.to_string()))?;
            }
        }
        WavEncoding::Float32 => {
            for &s in signal.samples() {
                writer
                    .write_sample(s as f32)
                    .map_err(|e| CoreError::Wav(e.to_string()))?;
            }
        }
    }
    writer.finalize().map_err(|e| CoreError::Wav(e.to_string()))
}
