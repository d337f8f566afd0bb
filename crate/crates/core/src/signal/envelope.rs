//! Binary energy envelope: marks the time regions whose frame energy clears
//! both a fraction of the loudest frame and an absolute sensor-noise floor.

use crate::error::{CoreError, Result};

use super::SampledSignal;

/// Per-frame binary mask over a signal's duration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEnvelope {
    mask: Vec<bool>,
    frame_len: usize,
    rate_hz: f64,
}

impl EnergyEnvelope {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn num_frames(&self) -> usize {
        self.mask.len()
    }

    pub fn duration_sec(&self) -> f64 {
        (self.mask.len() * self.frame_len) as f64 / self.rate_hz
    }

    /// Maximal runs of set frames as `(start, end)` sample ranges.
    pub fn active_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &on) in self.mask.iter().enumerate() {
            match (on, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s * self.frame_len, i * self.frame_len));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s * self.frame_len, self.mask.len() * self.frame_len));
        }
        runs
    }
}

/// Frame-energy threshold parameters.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeParams {
    /// Fraction of the loudest frame a frame must exceed. Default 0.05.
    pub threshold_frac: f64,
    /// Absolute mean-square floor below which a frame is never active,
    /// mirroring the sensor's quantization noise level. Default 1e-3.
    pub noise_floor: f64,
    /// Gaps shorter than this are closed so a phoneme is never split by a
    /// single quiet frame. Default 20 ms.
    pub close_gap_sec: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            threshold_frac: 0.05,
            noise_floor: 1e-3,
            close_gap_sec: 0.02,
        }
    }
}

/// Computes the binary energy envelope of `signal` with frames of
/// `frame_len` samples. A frame is active when its mean-square energy exceeds
/// `threshold_frac` of the loudest frame and the absolute noise floor.
pub fn energy_envelope(
    signal: &SampledSignal,
    frame_len: usize,
    params: &EnvelopeParams,
) -> EnergyEnvelope {
    assert!(frame_len >= 1, "frame_len must be at least 1");
    assert!(
        params.threshold_frac > 0.0 && params.threshold_frac < 1.0,
        "threshold_frac must be in (0, 1)"
    );
    let x = signal.samples();
    let n_frames = x.len().div_ceil(frame_len);
    let mut energies = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let lo = f * frame_len;
        let hi = (lo + frame_len).min(x.len());
        let e: f64 = x[lo..hi].iter().map(|v| v * v).sum::<f64>() / (hi - lo) as f64;
        energies.push(e);
    }
    let max_e = energies.iter().cloned().fold(0.0f64, f64::max);
    let threshold = (params.threshold_frac * max_e).max(params.noise_floor);
    let mut mask: Vec<bool> = energies.iter().map(|&e| e > threshold).collect();

    // Morphological closing: fill 0-gaps shorter than close_gap_sec that sit
    // between active frames.
    let gap_frames =
        (params.close_gap_sec * signal.rate_hz() / frame_len as f64).round() as usize;
    if gap_frames > 0 {
        let mut i = 0;
        while i < mask.len() {
            if !mask[i] {
                let gap_start = i;
                while i < mask.len() && !mask[i] {
                    i += 1;
                }
                let gap_len = i - gap_start;
                let bounded_left = gap_start > 0;
                let bounded_right = i < mask.len();
                if bounded_left && bounded_right && gap_len <= gap_frames {
                    for m in mask.iter_mut().take(i).skip(gap_start) {
                        *m = true;
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    EnergyEnvelope {
        mask,
        frame_len,
        rate_hz: signal.rate_hz(),
    }
}

/// Zeroes every sample under an inactive frame; active frames pass through.
pub fn apply_envelope(env: &EnergyEnvelope, signal: &SampledSignal) -> Result<SampledSignal> {
    let env_sec = env.duration_sec();
    let sig_sec = signal.duration_sec();
    let frame_sec = env.frame_len as f64 / env.rate_hz;
    if (env_sec - sig_sec).abs() > frame_sec + 1e-9 {
        return Err(CoreError::EnvelopeMismatch {
            envelope_sec: env_sec,
            signal_sec: sig_sec,
        });
    }
    let mut out = signal.samples().to_vec();
    for (f, &on) in env.mask.iter().enumerate() {
        if !on {
            let lo = f * env.frame_len;
            let hi = ((f + 1) * env.frame_len).min(out.len());
            if lo >= out.len() {
                break;
            }
            out[lo..hi].fill(0.0);
        }
    }
    // Samples past the last frame (duration slack) are treated as inactive.
    let covered = env.mask.len() * env.frame_len;
    if covered < out.len() {
        out[covered..].fill(0.0);
    }
    Ok(SampledSignal::from_trusted(out, signal.rate_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EnvelopeParams {
        EnvelopeParams::default()
    }

    #[test]
    fn all_zero_signal_gives_empty_mask() {
        let s = SampledSignal::new(vec![0.0; 4000], 8000.0).unwrap();
        let env = energy_envelope(&s, 80, &params());
        assert!(env.mask().iter().all(|&m| !m));
    }

    #[test]
    fn single_burst_marks_exactly_its_frames() {
        let mut x = vec![0.0; 4000];
        for v in x.iter_mut().take(2000).skip(1000) {
            *v = 1.0;
        }
        let s = SampledSignal::new(x, 8000.0).unwrap();
        let env = energy_envelope(&s, 80, &params());
        for (f, &on) in env.mask().iter().enumerate() {
            let covers_burst = (f + 1) * 80 > 1000 && f * 80 < 2000;
            assert_eq!(on, covers_burst, "frame {f}");
        }
    }

    #[test]
    fn faint_second_burst_is_dropped() {
        // Frame-energy ratio 0.03 < 0.05 threshold.
        let mut x = vec![0.0; 8000];
        for v in x.iter_mut().take(2000).skip(1000) {
            *v = 1.0;
        }
        let faint = 0.03f64.sqrt();
        for v in x.iter_mut().take(6000).skip(5000) {
            *v = faint;
        }
        let s = SampledSignal::new(x, 8000.0).unwrap();
        let env = energy_envelope(&s, 80, &params());
        let runs = env.active_runs();
        assert_eq!(runs.len(), 1);
        assert!(runs[0].0 <= 1000 + 80 && runs[0].1 >= 2000 - 80);
    }

    #[test]
    fn quiet_noise_stays_below_floor() {
        // Low-level white noise never activates the envelope thanks to the
        // absolute floor, whatever its relative frame spread.
        let mut state = 0x9E3779B97F4A7C15u64;
        let x: Vec<f64> = (0..8000)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                0.01 * (((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
            })
            .collect();
        let s = SampledSignal::new(x, 8000.0).unwrap();
        let env = energy_envelope(&s, 80, &params());
        assert!(env.mask().iter().all(|&m| !m));
    }

    #[test]
    fn closing_fills_short_gaps_only() {
        let mut x = vec![0.0; 8000];
        // Two 30 ms bursts separated by a 10 ms dip: one region after closing.
        for v in x.iter_mut().take(1240).skip(1000) {
            *v = 1.0;
        }
        for v in x.iter_mut().take(1560).skip(1320) {
            *v = 1.0;
        }
        let s = SampledSignal::new(x, 8000.0).unwrap();
        let env = energy_envelope(&s, 80, &params());
        assert_eq!(env.active_runs().len(), 1);

        // A 200 ms gap stays open.
        let mut y = vec![0.0; 8000];
        for v in y.iter_mut().take(1240).skip(1000) {
            *v = 1.0;
        }
        for v in y.iter_mut().take(3140).skip(2900) {
            *v = 1.0;
        }
        let s2 = SampledSignal::new(y, 8000.0).unwrap();
        let env2 = energy_envelope(&s2, 80, &params());
        assert_eq!(env2.active_runs().len(), 2);
    }

    #[test]
    fn apply_envelope_masks_and_is_idempotent() {
        let x: Vec<f64> = (0..4000).map(|i| ((i % 7) as f64 - 3.0) / 3.0).collect();
        let s = SampledSignal::new(x, 8000.0).unwrap();
        let mut mask = vec![false; 50];
        for m in mask.iter_mut().take(30).skip(10) {
            *m = true;
        }
        let env = EnergyEnvelope {
            mask,
            frame_len: 80,
            rate_hz: 8000.0,
        };
        let once = apply_envelope(&env, &s).unwrap();
        let twice = apply_envelope(&env, &once).unwrap();
        assert_eq!(once.samples(), twice.samples());
        for (i, (&a, &b)) in s.samples().iter().zip(once.samples()).enumerate() {
            let frame = i / 80;
            if (10..30).contains(&frame) {
                assert_eq!(a, b);
            } else {
                assert_eq!(b, 0.0);
            }
            assert!(b.abs() <= a.abs());
        }
    }

    #[test]
    fn apply_envelope_rejects_duration_mismatch() {
        let s = SampledSignal::new(vec![0.1; 8000], 8000.0).unwrap();
        let env = EnergyEnvelope {
            mask: vec![true; 10],
            frame_len: 80,
            rate_hz: 8000.0,
        };
        assert!(matches!(
            apply_envelope(&env, &s),
            Err(CoreError::EnvelopeMismatch { .. })
        ));
    }
}
