//! Glottal-pulse extraction via short-term autocorrelation and pulse-train
//! statistics.
//!
//! Frames are Hann-windowed and their autocorrelation is divided by the
//! window's own autocorrelation, which undoes the window's damping of the
//! correlation peaks. A frame is voiced when the corrected peak inside the
//! candidate period range clears the voicing threshold; consecutive voiced
//! frames form runs, and pulses are placed on waveform maxima along the
//! predicted period grid inside each run.

use crate::config::PitchConfig;
use crate::error::{CoreError, Result};
use crate::fft::autocorr;
use crate::signal::SampledSignal;

/// Detected glottal closure instants and cycle statistics for one segment.
#[derive(Debug, Clone, Default)]
pub struct GlottalPulseTrain {
    pulse_times: Vec<f64>,
    cycles: Vec<f64>,
    longest_run_sec: f64,
    mean_cycle_sec: f64,
}

impl GlottalPulseTrain {
    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    /// Inter-pulse intervals, `cycles[i] = pulse_times[i+1] - pulse_times[i]`.
    pub fn cycles(&self) -> &[f64] {
        &self.cycles
    }

    /// Duration of the longest continuous pulse sequence.
    pub fn longest_run_sec(&self) -> f64 {
        self.longest_run_sec
    }

    /// Mean plausible cycle length; 0 when no cycles were found.
    pub fn mean_cycle_sec(&self) -> f64 {
        self.mean_cycle_sec
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_times.is_empty()
    }

    /// Fundamental frequency estimate, `1 / mean_cycle_sec`.
    pub fn f0_hz(&self) -> Option<f64> {
        (self.mean_cycle_sec > 0.0).then(|| 1.0 / self.mean_cycle_sec)
    }
}

/// Extracts glottal pulses with default analysis parameters.
pub fn extract_glottal_pulses(
    segment: &SampledSignal,
    f0_min_hz: f64,
    f0_max_hz: f64,
) -> Result<GlottalPulseTrain> {
    let cfg = PitchConfig {
        f0_min_hz,
        f0_max_hz,
        ..PitchConfig::default()
    };
    extract_glottal_pulses_with(segment, &cfg)
}

/// Extracts glottal pulses with explicit analysis parameters.
pub fn extract_glottal_pulses_with(
    segment: &SampledSignal,
    cfg: &PitchConfig,
) -> Result<GlottalPulseTrain> {
    assert!(cfg.f0_min_hz < cfg.f0_max_hz, "f0 range must be ordered");
    let rate = segment.rate_hz();
    let min_len = (0.020 * rate).round() as usize;
    if segment.len() < min_len {
        return Err(CoreError::SegmentTooShort {
            got_sec: segment.duration_sec(),
            need_sec: 0.020,
        });
    }
    // The frame shrinks to the segment when the segment is shorter than the
    // configured analysis window, so 20-40 ms segments still get one frame.
    let frame_len = ((cfg.frame_sec * rate).round() as usize).min(segment.len());
    let hop = ((cfg.hop_sec * rate).round() as usize).max(1);
    let x = segment.samples();

    let lag_min = (rate / cfg.f0_max_hz).floor().max(2.0) as usize;
    let lag_max = ((rate / cfg.f0_min_hz).ceil() as usize).min(frame_len / 2);
    if lag_min >= lag_max {
        return Ok(GlottalPulseTrain::default());
    }

    let window: Vec<f64> = (0..frame_len)
        .map(|i| {
            0.5 - 0.5
                * (2.0 * std::f64::consts::PI * i as f64 / (frame_len - 1).max(1) as f64).cos()
        })
        .collect();
    let win_ac = autocorr(&window);

    let n_frames = if x.len() >= frame_len {
        (x.len() - frame_len) / hop + 1
    } else {
        0
    };
    // Per frame: Some(period in samples) when voiced.
    let mut frame_period: Vec<Option<f64>> = Vec::with_capacity(n_frames);
    let mut buf = vec![0.0f64; frame_len];
    for f in 0..n_frames {
        let start = f * hop;
        let frame = &x[start..start + frame_len];
        let mean = frame.iter().sum::<f64>() / frame_len as f64;
        for (b, &v) in buf.iter_mut().zip(frame) {
            *b = v - mean;
        }
        let peak_amp = buf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak_amp < 1e-9 {
            frame_period.push(None);
            continue;
        }
        for (b, w) in buf.iter_mut().zip(&window) {
            *b *= w;
        }
        let r = autocorr(&buf);
        if r[0] < 1e-18 {
            frame_period.push(None);
            continue;
        }
        let corrected = |tau: usize| -> f64 {
            let w = win_ac[tau] / win_ac[0];
            if w < 1e-6 {
                return 0.0;
            }
            ((r[tau] / r[0]) / w).min(1.5)
        };
        let mut best: Option<(f64, f64)> = None; // (strength, refined lag)
        for tau in lag_min..=lag_max.min(frame_len - 2) {
            let c_prev = corrected(tau - 1);
            let c = corrected(tau);
            let c_next = corrected(tau + 1);
            if c >= c_prev && c > c_next {
                // Parabolic refinement around the local maximum.
                let denom = c_prev - 2.0 * c + c_next;
                let delta = if denom.abs() > 1e-12 {
                    (0.5 * (c_prev - c_next) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                };
                let strength = c;
                if best.map_or(true, |(s, _)| strength > s) {
                    best = Some((strength, tau as f64 + delta));
                }
            }
        }
        match best {
            Some((strength, lag)) if strength > cfg.voicing_threshold => {
                frame_period.push(Some(lag));
            }
            _ => frame_period.push(None),
        }
    }

    // Group consecutive voiced frames into runs and place pulses.
    let mut pulses: Vec<usize> = Vec::new();
    let mut f = 0;
    while f < n_frames {
        if frame_period[f].is_none() {
            f += 1;
            continue;
        }
        let run_start = f;
        while f < n_frames && frame_period[f].is_some() {
            f += 1;
        }
        let run_end = f; // exclusive
        let region_lo = run_start * hop;
        let region_hi = ((run_end - 1) * hop + frame_len).min(x.len());
        let period_at = |sample: usize| -> f64 {
            // Nearest-frame period; frames are dense enough that nearest
            // lookup tracks the contour.
            let fi = (sample.saturating_sub(region_lo) / hop + run_start)
                .min(run_end - 1)
                .max(run_start);
            frame_period[fi].unwrap_or(frame_period[run_start].unwrap())
        };

        let t0_period = period_at(region_lo);
        let anchor_hi = (region_lo + t0_period.ceil() as usize + 1).min(region_hi);
        let anchor = argmax_range(x, region_lo, anchor_hi);
        let mut run_pulses = vec![anchor];

        // Walk right along the period grid.
        let mut t = anchor;
        loop {
            let period = period_at(t);
            let lo = t + (0.8 * period).floor() as usize;
            let hi = (t + (1.25 * period).ceil() as usize + 1).min(region_hi);
            if lo >= hi || lo >= region_hi {
                break;
            }
            let next = argmax_range(x, lo, hi);
            run_pulses.push(next);
            t = next;
        }
        // Walk left.
        let mut t = anchor;
        loop {
            let period = period_at(t);
            let hi = t.saturating_sub((0.8 * period).floor() as usize);
            let lo = t
                .saturating_sub((1.25 * period).ceil() as usize + 1)
                .max(region_lo);
            if hi <= lo || t < region_lo + (0.8 * period) as usize {
                break;
            }
            let prev = argmax_range(x, lo, hi);
            run_pulses.push(prev);
            t = prev;
        }
        pulses.extend(run_pulses);
    }

    pulses.sort_unstable();
    let min_sep = (rate / cfg.f0_max_hz * 0.5) as usize;
    pulses.dedup_by(|a, b| a.saturating_sub(*b) < min_sep.max(1));

    Ok(train_from_pulses(&pulses, rate, cfg.f0_min_hz))
}

fn argmax_range(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in x[lo..hi].iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = lo + i;
        }
    }
    best
}

fn train_from_pulses(pulses: &[usize], rate: f64, f0_min_hz: f64) -> GlottalPulseTrain {
    let pulse_times: Vec<f64> = pulses.iter().map(|&p| p as f64 / rate).collect();
    let cycles: Vec<f64> = pulse_times.windows(2).map(|w| w[1] - w[0]).collect();
    // A cycle longer than 1.25x the slowest plausible period marks a break
    // between runs rather than a real glottal cycle.
    let max_cycle = 1.25 / f0_min_hz;
    let plausible: Vec<f64> = cycles.iter().cloned().filter(|&c| c <= max_cycle).collect();
    let mean_cycle_sec = if !plausible.is_empty() {
        plausible.iter().sum::<f64>() / plausible.len() as f64
    } else if !cycles.is_empty() {
        cycles.iter().sum::<f64>() / cycles.len() as f64
    } else {
        0.0
    };

    let mut longest = 0.0f64;
    let mut run_start = 0usize;
    for i in 0..cycles.len() {
        if cycles[i] > max_cycle {
            longest = longest.max(pulse_times[i] - pulse_times[run_start]);
            run_start = i + 1;
        }
    }
    if !pulse_times.is_empty() {
        longest = longest.max(pulse_times[pulse_times.len() - 1] - pulse_times[run_start]);
    }

    GlottalPulseTrain {
        pulse_times,
        cycles,
        longest_run_sec: longest,
        mean_cycle_sec,
    }
}

/// Mean relative cycle difference between two pulse trains.
///
/// Cycles are paired by nearest-pulse association within half a cycle, the
/// per-pair distance is `|ca - cb| / max(ca, cb)`, and the result is averaged
/// over both association directions so the measure is symmetric. Returns 1.0
/// when no pulses can be associated at all.
pub fn pitch_distance(a: &GlottalPulseTrain, b: &GlottalPulseTrain) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::NoPitch);
    }
    let d_ab = directed_distance(a, b);
    let d_ba = directed_distance(b, a);
    Ok(match (d_ab, d_ba) {
        (Some(x), Some(y)) => 0.5 * (x + y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => 1.0,
    })
}

fn directed_distance(a: &GlottalPulseTrain, b: &GlottalPulseTrain) -> Option<f64> {
    if a.cycles.is_empty() || b.cycles.is_empty() {
        return None;
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, &ca) in a.cycles.iter().enumerate() {
        let t = a.pulse_times[i];
        let j = nearest_index(&b.pulse_times, t);
        if (b.pulse_times[j] - t).abs() <= ca / 2.0 && j < b.cycles.len() {
            let cb = b.cycles[j];
            total += (ca - cb).abs() / ca.max(cb);
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

fn nearest_index(sorted: &[f64], t: f64) -> usize {
    match sorted.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => {
            if i == 0 {
                0
            } else if i >= sorted.len() {
                sorted.len() - 1
            } else if (sorted[i] - t).abs() < (t - sorted[i - 1]).abs() {
                i
            } else {
                i - 1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Gaussian-bump pulse train: glottal-like periodic excitation with an
    /// exactly known period.
    pub(crate) fn bump_train(f0_hz: f64, rate: f64, duration_sec: f64) -> SampledSignal {
        let n = (duration_sec * rate) as usize;
        let period = rate / f0_hz;
        let width = period * 0.12;
        let mut x = vec![0.0f64; n];
        let mut center = period * 0.5;
        while center < n as f64 {
            let lo = (center - 4.0 * width).max(0.0) as usize;
            let hi = ((center + 4.0 * width) as usize).min(n);
            for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
                let d = (i as f64 - center) / width;
                *v += (-0.5 * d * d).exp();
            }
            center += period;
        }
        SampledSignal::new(x, rate).unwrap()
    }

    fn synth_train(f0_hz: f64, rate: f64, dur: f64) -> GlottalPulseTrain {
        let period = 1.0 / f0_hz;
        let n = (dur / period) as usize;
        let pulses: Vec<usize> = (0..n)
            .map(|k| ((k as f64 * period) * rate).round() as usize)
            .collect();
        train_from_pulses(&pulses, rate, 80.0)
    }

    #[test]
    fn extracts_125hz_within_five_percent() {
        let s = bump_train(125.0, 8000.0, 0.2);
        let train = extract_glottal_pulses(&s, 80.0, 333.0).unwrap();
        let mean = train.mean_cycle_sec();
        assert!(
            (mean - 0.008).abs() <= 0.008 * 0.05,
            "mean cycle {mean} not within 5% of 8 ms"
        );
    }

    #[test]
    fn sweep_of_f0_values_recovered() {
        for &f0 in &[80.0, 110.0, 150.0, 200.0, 260.0, 333.0] {
            let s = bump_train(f0, 8000.0, 0.25);
            let train = extract_glottal_pulses(&s, 80.0, 333.0).unwrap();
            let est = train.f0_hz().expect("voiced train");
            assert!(
                est >= 0.95 * f0 && est <= 1.05 * f0,
                "f0 {f0} estimated as {est}"
            );
        }
    }

    #[test]
    fn white_noise_yields_no_sustained_run() {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..1600).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let s = SampledSignal::new(x, 8000.0).unwrap();
            let train = extract_glottal_pulses(&s, 80.0, 333.0).unwrap();
            worst = worst.max(train.longest_run_sec());
        }
        assert!(worst < 0.02, "noise produced a {worst} s pulse run");
    }

    #[test]
    fn silence_yields_no_pulses() {
        let s = SampledSignal::new(vec![0.0; 1600], 8000.0).unwrap();
        let train = extract_glottal_pulses(&s, 80.0, 333.0).unwrap();
        assert!(train.is_empty());
        assert!(train.pulse_times().is_empty());
    }

    #[test]
    fn too_short_segment_errors() {
        let s = SampledSignal::new(vec![0.1; 100], 8000.0).unwrap();
        assert!(matches!(
            extract_glottal_pulses(&s, 80.0, 333.0),
            Err(CoreError::SegmentTooShort { .. })
        ));
    }

    #[test]
    fn delay_shifts_pulses_and_keeps_cycles() {
        let rate = 8000.0;
        let base = bump_train(140.0, rate, 0.3);
        let train_a = extract_glottal_pulses(&base, 80.0, 333.0).unwrap();

        for &delay in &[80usize, 160, 137] {
            let mut shifted = vec![0.0; delay];
            shifted.extend_from_slice(base.samples());
            let delayed = SampledSignal::new(shifted, rate).unwrap();
            let train_b = extract_glottal_pulses(&delayed, 80.0, 333.0).unwrap();
            let d_sec = delay as f64 / rate;

            // Compare pulses in the overlap of both trains' spans.
            let mut matched = 0;
            for &tb in train_b.pulse_times() {
                let t = tb - d_sec;
                let near = train_a
                    .pulse_times()
                    .iter()
                    .map(|&ta| (ta - t).abs())
                    .fold(f64::INFINITY, f64::min);
                if near <= 1.5 / rate {
                    matched += 1;
                }
            }
            let min_count = train_a.pulse_times().len().min(train_b.pulse_times().len());
            assert!(
                matched + 2 >= min_count,
                "delay {delay}: only {matched} of {min_count} pulses line up"
            );
            let mean_a = train_a.mean_cycle_sec();
            let mean_b = train_b.mean_cycle_sec();
            assert!((mean_a - mean_b).abs() <= 1.5 / rate);
        }
    }

    #[test]
    fn distance_of_identical_trains_is_zero() {
        let a = synth_train(150.0, 8000.0, 0.3);
        let d = pitch_distance(&a, &a).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn distance_between_octaves_is_half() {
        let a = synth_train(100.0, 48000.0, 0.25);
        let b = synth_train(200.0, 48000.0, 0.25);
        let d = pitch_distance(&a, &b).unwrap();
        assert!((d - 0.5).abs() < 1e-6, "distance {d}");
    }

    #[test]
    fn distance_between_close_pitches() {
        let a = synth_train(120.0, 48000.0, 0.5);
        let b = synth_train(126.0, 48000.0, 0.5);
        let d = pitch_distance(&a, &b).unwrap();
        assert!((d - 0.047).abs() <= 0.01, "distance {d}");
    }

    #[test]
    fn distance_is_symmetric() {
        let a = synth_train(111.0, 8000.0, 0.3);
        let b = synth_train(143.0, 8000.0, 0.3);
        let ab = pitch_distance(&a, &b).unwrap();
        let ba = pitch_distance(&b, &a).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn empty_train_is_an_error() {
        let a = synth_train(120.0, 8000.0, 0.3);
        let empty = GlottalPulseTrain::default();
        assert!(matches!(pitch_distance(&a, &empty), Err(CoreError::NoPitch)));
        assert!(matches!(pitch_distance(&empty, &a), Err(CoreError::NoPitch)));
    }
}
