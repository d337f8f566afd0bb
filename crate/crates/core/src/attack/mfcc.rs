//! MFCC extraction and magnitude-consistent inversion, the core of the
//! reconstructed-voice attack.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};
use crate::signal::SampledSignal;

/// Analysis parameters of the MFCC pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccParams {
    pub hop_samples: usize,
    pub window_samples: usize,
    /// Length of the coefficient vector per frame. May exceed the band count;
    /// inversion then uses only the first `n_mel_bands` coefficients.
    pub n_coeffs: usize,
    pub n_mel_bands: usize,
    pub rate_hz: f64,
}

impl Default for MfccParams {
    fn default() -> Self {
        Self {
            hop_samples: 256,
            window_samples: 512,
            n_coeffs: 77,
            n_mel_bands: 30,
            rate_hz: 8000.0,
        }
    }
}

impl MfccParams {
    fn validate(&self) -> Result<()> {
        if self.hop_samples == 0 || self.hop_samples > self.window_samples {
            return Err(CoreError::InvalidConfig(
                "hop must be positive and no larger than the window".into(),
            ));
        }
        if self.n_mel_bands < 2 || self.n_coeffs == 0 {
            return Err(CoreError::InvalidConfig(
                "need at least two Mel bands and one coefficient".into(),
            ));
        }
        Ok(())
    }

    fn n_bins(&self) -> usize {
        self.window_samples / 2 + 1
    }
}

/// Coefficient matrix: one row of `n_coeffs` values per frame.
#[derive(Debug, Clone)]
pub struct MfccMatrix {
    pub frames: Vec<Vec<f64>>,
}

const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular Mel filterbank as a dense `bands x bins` matrix.
fn mel_filterbank(p: &MfccParams) -> Vec<Vec<f64>> {
    let n_bins = p.n_bins();
    let bin_hz = p.rate_hz / p.window_samples as f64;
    let mel_hi = hz_to_mel(p.rate_hz / 2.0);
    let points: Vec<f64> = (0..p.n_mel_bands + 2)
        .map(|i| mel_to_hz(mel_hi * i as f64 / (p.n_mel_bands + 1) as f64))
        .collect();
    (0..p.n_mel_bands)
        .map(|b| {
            let (lo, center, hi) = (points[b], points[b + 1], points[b + 2]);
            (0..n_bins)
                .map(|bin| {
                    let f = bin as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= center {
                        (f - lo) / (center - lo).max(1e-9)
                    } else {
                        (hi - f) / (hi - center).max(1e-9)
                    }
                })
                .collect()
        })
        .collect()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1).max(1) as f64).cos())
        .collect()
}

/// Orthonormal DCT-II of `x`, evaluated for `k = 0..n_out`. `n_out` may
/// exceed `x.len()`; the cosine basis extends naturally.
fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            let acc: f64 = x
                .iter()
                .enumerate()
                .map(|(b, &v)| {
                    v * (std::f64::consts::PI * k as f64 * (2.0 * b as f64 + 1.0) / (2.0 * n))
                        .cos()
                })
                .sum();
            scale * acc
        })
        .collect()
}

/// Inverse of [`dct2`] for `n` outputs from up to `n` coefficients.
fn idct2(coeffs: &[f64], n: usize) -> Vec<f64> {
    let used = coeffs.len().min(n);
    let nf = n as f64;
    (0..n)
        .map(|b| {
            (0..used)
                .map(|k| {
                    let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                    scale
                        * coeffs[k]
                        * (std::f64::consts::PI * k as f64 * (2.0 * b as f64 + 1.0) / (2.0 * nf))
                            .cos()
                })
                .sum()
        })
        .collect()
}

/// Magnitude spectrogram: `frames x bins`.
pub(crate) fn stft_magnitude(x: &[f64], p: &MfccParams) -> Vec<Vec<f64>> {
    let win = hann(p.window_samples);
    let n_frames = (x.len() - p.window_samples) / p.hop_samples + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(p.window_samples);
    let mut out = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); p.window_samples];
    for f in 0..n_frames {
        let start = f * p.hop_samples;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * win[i], 0.0);
        }
        fft.process(&mut buf);
        out.push(buf[..p.n_bins()].iter().map(|c| c.norm()).collect());
    }
    out
}

/// Standard MFCC pipeline: STFT power, Mel filterbank, log, DCT-II, first
/// `n_coeffs` coefficients per frame.
pub fn mfcc_extract(signal: &SampledSignal, p: &MfccParams) -> Result<MfccMatrix> {
    p.validate()?;
    if signal.len() < p.window_samples {
        return Err(CoreError::SignalTooShort {
            got: signal.len(),
            need: p.window_samples,
        });
    }
    let bank = mel_filterbank(p);
    let mags = stft_magnitude(signal.samples(), p);
    let frames = mags
        .iter()
        .map(|mag| {
            let log_energies: Vec<f64> = bank
                .iter()
                .map(|filt| {
                    let e: f64 = filt
                        .iter()
                        .zip(mag)
                        .map(|(w, m)| w * m * m)
                        .sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect();
            dct2(&log_energies, p.n_coeffs)
        })
        .collect();
    Ok(MfccMatrix { frames })
}

/// Reconstructs a time signal from MFCCs: inverse DCT, exponentiation,
/// pseudo-inverse filterbank to a magnitude spectrogram, then iterative
/// magnitude-consistent phase recovery starting from zero phase.
pub fn mfcc_invert(coeffs: &MfccMatrix, p: &MfccParams, phase_iters: usize) -> Result<SampledSignal> {
    p.validate()?;
    let bank = mel_filterbank(p);
    // Per-bin normalization of the transposed filterbank.
    let n_bins = p.n_bins();
    let mut bin_norm = vec![0.0f64; n_bins];
    for filt in &bank {
        for (n, w) in bin_norm.iter_mut().zip(filt) {
            *n += w;
        }
    }

    let magnitudes: Vec<Vec<f64>> = coeffs
        .frames
        .iter()
        .map(|row| {
            let used = row.len().min(p.n_mel_bands);
            let log_energies = idct2(&row[..used], p.n_mel_bands);
            let energies: Vec<f64> = log_energies.iter().map(|&l| l.exp()).collect();
            (0..n_bins)
                .map(|bin| {
                    if bin_norm[bin] < 1e-9 {
                        return 0.0;
                    }
                    let e: f64 = bank
                        .iter()
                        .zip(&energies)
                        .map(|(filt, en)| filt[bin] * en)
                        .sum();
                    (e / bin_norm[bin]).max(0.0).sqrt()
                })
                .collect()
        })
        .collect();

    let n_frames = magnitudes.len();
    let out_len = (n_frames - 1) * p.hop_samples + p.window_samples;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(p.window_samples);
    let ifft = planner.plan_fft_inverse(p.window_samples);
    let win = hann(p.window_samples);

    // Zero-phase start.
    let mut phases: Vec<Vec<f64>> = vec![vec![0.0; n_bins]; n_frames];
    let mut time = vec![0.0f64; out_len];
    for _ in 0..phase_iters.max(1) {
        // Spectrogram -> time via overlap-add.
        time.iter_mut().for_each(|v| *v = 0.0);
        let mut win_acc = vec![0.0f64; out_len];
        let mut buf = vec![Complex::new(0.0, 0.0); p.window_samples];
        for (f, (mag, phase)) in magnitudes.iter().zip(&phases).enumerate() {
            for bin in 0..n_bins {
                buf[bin] = Complex::from_polar(mag[bin], phase[bin]);
            }
            // Hermitian mirror for a real output frame.
            for bin in n_bins..p.window_samples {
                buf[bin] = buf[p.window_samples - bin].conj();
            }
            ifft.process(&mut buf);
            let start = f * p.hop_samples;
            let scale = 1.0 / p.window_samples as f64;
            for i in 0..p.window_samples {
                time[start + i] += buf[i].re * scale * win[i];
                win_acc[start + i] += win[i] * win[i];
            }
        }
        for (v, w) in time.iter_mut().zip(&win_acc) {
            if *w > 1e-9 {
                *v /= *w;
            }
        }
        // Time -> phases for the next round.
        let mut fbuf = vec![Complex::new(0.0, 0.0); p.window_samples];
        for (f, phase) in phases.iter_mut().enumerate() {
            let start = f * p.hop_samples;
            for i in 0..p.window_samples {
                let x = if start + i < time.len() { time[start + i] } else { 0.0 };
                fbuf[i] = Complex::new(x * win[i], 0.0);
            }
            fft.process(&mut fbuf);
            for bin in 0..n_bins {
                phase[bin] = fbuf[bin].arg();
            }
        }
    }

    SampledSignal::new(time, p.rate_hz)
}

/// Mean per-frame Pearson correlation of log-magnitude spectra; the quality
/// oracle for reconstruction tests.
pub fn spectral_envelope_correlation(a: &SampledSignal, b: &SampledSignal, p: &MfccParams) -> f64 {
    let ma = stft_magnitude(a.samples(), p);
    let mb = stft_magnitude(b.samples(), p);
    let n = ma.len().min(mb.len());
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for f in 0..n {
        let la: Vec<f64> = ma[f].iter().map(|&m| (m.max(1e-10)).ln()).collect();
        let lb: Vec<f64> = mb[f].iter().map(|&m| (m.max(1e-10)).ln()).collect();
        total += pearson(&la, &lb);
    }
    total / n as f64
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_utterance, Formant, PlanItem, SynthConfig};

    fn paper_params() -> MfccParams {
        MfccParams::default()
    }

    fn vowel(seed: u64) -> SampledSignal {
        let cfg = SynthConfig {
            seed,
            rate_hz: 8000.0,
            ..SynthConfig::default()
        };
        let plan = vec![PlanItem::voiced(
            130.0,
            vec![Formant::new(640.0, 90.0), Formant::new(1190.0, 120.0)],
            0.5,
        )];
        synth_utterance(&cfg, &plan).unwrap().mic
    }

    #[test]
    fn frame_count_matches_hop_arithmetic() {
        let s = vowel(1);
        let p = paper_params();
        let m = mfcc_extract(&s, &p).unwrap();
        let expected = (s.len() - p.window_samples) / p.hop_samples + 1;
        assert_eq!(m.frames.len(), expected);
        assert_eq!(m.frames[0].len(), 77);
    }

    #[test]
    fn too_short_signal_errors() {
        let s = SampledSignal::new(vec![0.1; 100], 8000.0).unwrap();
        assert!(matches!(
            mfcc_extract(&s, &paper_params()),
            Err(CoreError::SignalTooShort { .. })
        ));
    }

    #[test]
    fn silence_hits_the_log_floor_uniformly() {
        let s = SampledSignal::new(vec![0.0; 4096], 8000.0).unwrap();
        let m = mfcc_extract(&s, &paper_params()).unwrap();
        let expected = dct2(&vec![LOG_FLOOR.ln(); 30], 77);
        for frame in &m.frames {
            for (a, b) in frame.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tone_energy_lands_in_the_right_bands() {
        let rate = 8000.0;
        let x: Vec<f64> = (0..4096)
            .map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate).sin())
            .collect();
        let s = SampledSignal::new(x, rate).unwrap();
        let p = MfccParams {
            n_coeffs: 30,
            ..paper_params()
        };
        // Filterbank oracle: which band has its center nearest 1 kHz?
        let bank = mel_filterbank(&p);
        let bin_hz = rate / p.window_samples as f64;
        let expected_band = bank
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                let resp =
                    |f: &Vec<f64>| f[(1000.0 / bin_hz) as usize].max(f[(1000.0 / bin_hz) as usize + 1]);
                resp(a).partial_cmp(&resp(b)).unwrap()
            })
            .unwrap()
            .0;

        // Energy per band straight from the filterbank.
        let mags = stft_magnitude(s.samples(), &p);
        let mut band_energy = vec![0.0f64; p.n_mel_bands];
        for mag in &mags {
            for (b, filt) in bank.iter().enumerate() {
                band_energy[b] += filt.iter().zip(mag).map(|(w, m)| w * m * m).sum::<f64>();
            }
        }
        let peak_band = band_energy
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(
            (peak_band as isize - expected_band as isize).abs() <= 1,
            "tone energy in band {peak_band}, filterbank oracle says {expected_band}"
        );
    }

    #[test]
    fn reconstruction_tracks_band_count() {
        let s = vowel(5);
        let p30 = MfccParams {
            n_mel_bands: 30,
            ..paper_params()
        };
        let p15 = MfccParams {
            n_mel_bands: 15,
            ..paper_params()
        };
        let rec30 = mfcc_invert(&mfcc_extract(&s, &p30).unwrap(), &p30, 32).unwrap();
        let rec15 = mfcc_invert(&mfcc_extract(&s, &p15).unwrap(), &p15, 32).unwrap();
        let c30 = spectral_envelope_correlation(&s, &rec30, &paper_params());
        let c15 = spectral_envelope_correlation(&s, &rec15, &paper_params());
        assert!(c30 >= 0.8, "30-band envelope correlation {c30}");
        assert!(c15 < c30, "15 bands ({c15}) must be worse than 30 ({c30})");
    }

    #[test]
    fn zero_coefficients_give_near_silence() {
        let p = MfccParams {
            n_coeffs: 30,
            ..paper_params()
        };
        let coeffs = MfccMatrix {
            frames: vec![vec![0.0; 30]; 20],
        };
        let out = mfcc_invert(&coeffs, &p, 4).unwrap();
        // Zero cepstrum means unit band energies, tiny after sqrt and
        // windowing; the reconstruction must carry almost no energy.
        let peak = out.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 2.0, "peak {peak}");
    }

    #[test]
    fn inversion_is_deterministic() {
        let s = vowel(9);
        let p = paper_params();
        let c = mfcc_extract(&s, &p).unwrap();
        let a = mfcc_invert(&c, &p, 8).unwrap();
        let b = mfcc_invert(&c, &p, 8).unwrap();
        assert_eq!(a.samples(), b.samples());
    }
}
