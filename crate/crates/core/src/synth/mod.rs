//! Source-filter speech synthesizer producing paired air (microphone-like)
//! and body-conduction (sensor-like) signals with ground-truth content.
//!
//! Voiced excitation is a Rosenberg-style glottal pulse train; unvoiced
//! excitation is shaped noise. The microphone channel is the excitation
//! through a cascade of formant resonators plus additive air noise; the body
//! channel is the same excitation through a lowpass, an attenuation and a
//! sensor noise floor. Both channels share excitation timing exactly.

mod bank;
mod corpus;
mod noise;

pub use bank::{synth_phoneme_bank, BankEntry, PhonemeKind};
pub use corpus::{synth_command_corpus, SpeakerCorpus};
pub use noise::{make_noise, NoiseKind};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::signal::{lowpass_fir_taps, SampledSignal};

/// One vocal-tract resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formant {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
}

impl Formant {
    pub fn new(center_hz: f64, bandwidth_hz: f64) -> Self {
        Self {
            center_hz,
            bandwidth_hz,
        }
    }
}

/// Transfer model of skin/sensor coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyChannel {
    pub lowpass_hz: f64,
    pub attenuation_db: f64,
    pub noise_floor: f64,
}

impl Default for BodyChannel {
    fn default() -> Self {
        Self {
            lowpass_hz: 3000.0,
            attenuation_db: -6.0,
            noise_floor: 1e-4,
        }
    }
}

/// Synthesis-wide settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Base fundamental frequency, Hz. Must lie in the human range.
    pub f0_hz: f64,
    /// Default formant set, used by plan items that carry none.
    pub formants: Vec<Formant>,
    pub duration_sec: f64,
    /// Per-cycle period jitter, percent.
    pub jitter_pct: f64,
    /// Air-channel SNR, dB.
    pub air_snr_db: f64,
    pub body_channel: BodyChannel,
    pub seed: u64,
    /// Synthesis sampling rate, Hz.
    pub rate_hz: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            f0_hz: 125.0,
            formants: vec![Formant::new(500.0, 90.0), Formant::new(1500.0, 120.0)],
            duration_sec: 1.0,
            jitter_pct: 0.5,
            air_snr_db: 30.0,
            body_channel: BodyChannel::default(),
            seed: 1,
            rate_hz: 16000.0,
        }
    }
}

/// One step of an utterance plan. A pause is an unvoiced item with no
/// formants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanItem {
    pub f0_hz: f64,
    pub formants: Vec<Formant>,
    pub duration_sec: f64,
    pub voiced: bool,
}

impl PlanItem {
    pub fn voiced(f0_hz: f64, formants: Vec<Formant>, duration_sec: f64) -> Self {
        Self {
            f0_hz,
            formants,
            duration_sec,
            voiced: true,
        }
    }

    pub fn unvoiced(formants: Vec<Formant>, duration_sec: f64) -> Self {
        Self {
            f0_hz: 0.0,
            formants,
            duration_sec,
            voiced: false,
        }
    }

    pub fn pause(duration_sec: f64) -> Self {
        Self {
            f0_hz: 0.0,
            formants: Vec::new(),
            duration_sec,
            voiced: false,
        }
    }

    fn is_pause(&self) -> bool {
        !self.voiced && self.formants.is_empty()
    }
}

/// Ground-truth content segment of a synthesized utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSegment {
    pub start_sec: f64,
    pub end_sec: f64,
    pub f0_hz: f64,
}

/// Paired channels plus ground truth, the desk-scale recording oracle.
#[derive(Debug, Clone)]
pub struct UtterancePair {
    pub acc: SampledSignal,
    pub mic: SampledSignal,
    pub truth: Vec<TruthSegment>,
}

/// Synthesizes one utterance following `plan`. Items with zero duration are
/// skipped; adjacent non-pause items form one ground-truth segment.
pub fn synth_utterance(cfg: &SynthConfig, plan: &[PlanItem]) -> Result<UtterancePair> {
    if plan.is_empty() {
        return Err(CoreError::InvalidConfig("empty synthesis plan".into()));
    }
    let rate = cfg.rate_hz;
    let nyquist = rate / 2.0;
    if !(80.0..=333.0).contains(&cfg.f0_hz) {
        return Err(CoreError::InvalidConfig(format!(
            "base f0 {} Hz outside the human range",
            cfg.f0_hz
        )));
    }
    for item in plan {
        if item.voiced && !(80.0..=333.0).contains(&item.f0_hz) {
            return Err(CoreError::InvalidConfig(format!(
                "plan f0 {} Hz outside the human range",
                item.f0_hz
            )));
        }
        for f in &item.formants {
            if f.center_hz >= nyquist {
                return Err(CoreError::InvalidConfig(format!(
                    "formant at {} Hz is at or above Nyquist {nyquist} Hz",
                    f.center_hz
                )));
            }
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let total: usize = plan
        .iter()
        .map(|p| (p.duration_sec * rate).round() as usize)
        .sum();
    let mut excitation = vec![0.0f64; total];
    let mut mic = vec![0.0f64; total];
    let mut truth = Vec::new();
    let mut cursor = 0usize;
    let mut open_segment: Option<(usize, f64)> = None;

    for item in plan {
        let n = (item.duration_sec * rate).round() as usize;
        if n == 0 {
            continue;
        }
        let span = cursor..cursor + n;
        if item.is_pause() {
            if let Some((start, f0)) = open_segment.take() {
                truth.push(TruthSegment {
                    start_sec: start as f64 / rate,
                    end_sec: cursor as f64 / rate,
                    f0_hz: f0,
                });
            }
        } else {
            if open_segment.is_none() {
                open_segment = Some((cursor, if item.voiced { item.f0_hz } else { 0.0 }));
            } else if item.voiced {
                if let Some((_, f0)) = open_segment.as_mut() {
                    if *f0 == 0.0 {
                        *f0 = item.f0_hz;
                    }
                }
            }
            let item_exc = if item.voiced {
                rosenberg_train(item.f0_hz, rate, n, cfg.jitter_pct, &mut rng)
            } else {
                (0..n).map(|_| 0.3 * gaussian(&mut rng)).collect()
            };
            let filtered = resonate(&item_exc, &item.formants, rate);
            let peak = filtered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gain = if peak > 0.0 { 0.9 / peak } else { 0.0 };
            for (i, idx) in span.clone().enumerate() {
                excitation[idx] = item_exc[i];
                mic[idx] = filtered[i] * gain;
            }
        }
        cursor += n;
    }
    if let Some((start, f0)) = open_segment.take() {
        truth.push(TruthSegment {
            start_sec: start as f64 / rate,
            end_sec: cursor as f64 / rate,
            f0_hz: f0,
        });
    }

    // Air channel: additive noise at the configured SNR.
    let sig_power = mic.iter().map(|v| v * v).sum::<f64>() / mic.len().max(1) as f64;
    let noise_power = sig_power / 10f64.powf(cfg.air_snr_db / 10.0);
    let noise_sigma = noise_power.sqrt();
    for v in mic.iter_mut() {
        *v += noise_sigma * gaussian(&mut rng);
    }

    // Body channel: lowpass, attenuation, sensor noise floor.
    let body = &cfg.body_channel;
    let cutoff = (body.lowpass_hz / rate).min(0.49);
    let taps = lowpass_fir_taps(cutoff, 0.3 * cutoff);
    let mut acc = crate::signal::filter_same(&excitation, &taps);
    let gain = 10f64.powf(body.attenuation_db / 20.0);
    for v in acc.iter_mut() {
        *v = *v * gain + body.noise_floor * gaussian(&mut rng);
    }

    Ok(UtterancePair {
        acc: SampledSignal::new(acc, rate)?,
        mic: SampledSignal::new(mic, rate)?,
        truth,
    })
}

/// Rosenberg-style glottal pulse train with per-cycle jitter.
fn rosenberg_train(
    f0_hz: f64,
    rate: f64,
    n: usize,
    jitter_pct: f64,
    rng: &mut ChaCha20Rng,
) -> Vec<f64> {
    let mut out = vec![0.0f64; n];
    let base_period = rate / f0_hz;
    let mut t = 0.0f64;
    while (t as usize) < n {
        let jitter = 1.0 + jitter_pct / 100.0 * (rng.random::<f64>() * 2.0 - 1.0);
        let period = base_period * jitter;
        // Opening phase 40% of the cycle, closing 16%.
        let t_p = 0.40 * period;
        let t_n = 0.16 * period;
        let start = t as usize;
        let end = ((t + t_p + t_n) as usize).min(n);
        for (idx, slot) in out.iter_mut().enumerate().take(end).skip(start) {
            let phase = idx as f64 - t;
            *slot += if phase < t_p {
                0.5 * (1.0 - (std::f64::consts::PI * phase / t_p).cos())
            } else {
                (std::f64::consts::PI * (phase - t_p) / (2.0 * t_n)).cos()
            };
        }
        t += period;
    }
    // Remove the DC pedestal so the highpass stage has little to do.
    let mean = out.iter().sum::<f64>() / n.max(1) as f64;
    for v in out.iter_mut() {
        *v -= mean;
    }
    out
}

/// Cascade of two-pole resonators, unity gain at the resonance.
fn resonate(x: &[f64], formants: &[Formant], rate: f64) -> Vec<f64> {
    if formants.is_empty() {
        return x.to_vec();
    }
    let mut y = x.to_vec();
    for f in formants {
        let r = (-std::f64::consts::PI * f.bandwidth_hz / rate).exp();
        let theta = 2.0 * std::f64::consts::PI * f.center_hz / rate;
        let b1 = 2.0 * r * theta.cos();
        let b2 = -r * r;
        let a0 = 1.0 - b1 - b2;
        let mut y1 = 0.0f64;
        let mut y2 = 0.0f64;
        for v in y.iter_mut() {
            let out = a0 * *v + b1 * y1 + b2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    y
}

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller on two uniforms.
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub(crate) fn gaussian_from(rng: &mut ChaCha20Rng) -> f64 {
    gaussian(rng)
}
