//! Normalized cross-correlation and correlation-peak alignment.

use crate::error::{CoreError, Result};
use crate::fft::{xcorr_direct, xcorr_fft};

use super::SampledSignal;

/// Threshold above which the frequency-domain path takes over. Both paths
/// agree within 1e-9.
const FFT_THRESHOLD: usize = 4096;

/// Cross-correlation normalized by the geometric mean of the signals'
/// energies, so values live in [-1, 1] up to rounding.
#[derive(Debug, Clone)]
pub struct CrossCorrelation {
    values: Vec<f64>,
    zero_lag_index: usize,
}

impl CrossCorrelation {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_lag_index(&self) -> usize {
        self.zero_lag_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lag in samples for a value index.
    pub fn lag_at(&self, index: usize) -> isize {
        index as isize - self.zero_lag_index as isize
    }

    /// Index of the maximum absolute value; earliest index wins ties.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        best
    }

    /// Maximum absolute correlation value.
    pub fn peak_abs(&self) -> f64 {
        self.values[self.peak_index()].abs()
    }

    #[cfg(test)]
    pub(crate) fn test_from_values(values: Vec<f64>, zero_lag_index: usize) -> Self {
        Self {
            values,
            zero_lag_index,
        }
    }
}

/// Computes `values[k] = sum_t f(t) g(t+lag_k) / sqrt(energy(f) energy(g))`
/// over the full lag range `[-(len_f-1), len_g-1]`.
pub fn xcorr_normalized(f: &SampledSignal, g: &SampledSignal) -> Result<CrossCorrelation> {
    if f.is_empty() || g.is_empty() {
        return Err(CoreError::DegenerateSignal("empty signal in cross-correlation"));
    }
    let ef = f.energy();
    let eg = g.energy();
    if ef == 0.0 || eg == 0.0 {
        return Err(CoreError::DegenerateSignal("all-zero signal in cross-correlation"));
    }
    let raw = if f.len().max(g.len()) > FFT_THRESHOLD {
        xcorr_fft(f.samples(), g.samples())
    } else {
        xcorr_direct(f.samples(), g.samples())
    };
    let norm = (ef * eg).sqrt();
    let values: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    Ok(CrossCorrelation {
        values,
        zero_lag_index: f.len() - 1,
    })
}

/// Finds the shift maximizing the cross-correlation and truncates both
/// signals to their overlap at that shift. Positive shift means `g` lags `f`
/// (g was recorded `shift` samples later). Ties break toward the smallest
/// absolute shift.
pub fn align(
    f: &SampledSignal,
    g: &SampledSignal,
) -> Result<(isize, SampledSignal, SampledSignal)> {
    assert_eq!(
        f.rate_hz(),
        g.rate_hz(),
        "alignment requires equal sample rates"
    );
    if f.is_empty() || g.is_empty() {
        return Err(CoreError::DegenerateSignal("empty signal in align"));
    }
    let h = xcorr_normalized(f, g)?;
    let mut best_lag = 0isize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in h.values().iter().enumerate() {
        let lag = h.lag_at(i);
        if *v > best_val || (*v == best_val && lag.abs() < best_lag.abs()) {
            best_val = *v;
            best_lag = lag;
        }
    }
    let shift = best_lag;

    // g(t + shift) lines up with f(t): overlap in f-indices.
    let start = (-shift).max(0) as usize;
    let end = (f.len() as isize).min(g.len() as isize - shift).max(0) as usize;
    if start >= end {
        return Err(CoreError::AlignmentFailed);
    }
    let f_aligned = f.slice(start, end);
    let g_start = (start as isize + shift) as usize;
    let g_aligned = g.slice(g_start, g_start + (end - start));
    Ok((shift, f_aligned, g_aligned))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut state = seed | 1;
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn self_correlation_peaks_at_one() {
        let s = SampledSignal::new(noise(7, 500), 8000.0).unwrap();
        let h = xcorr_normalized(&s, &s).unwrap();
        let peak = h.peak_index();
        assert_eq!(h.lag_at(peak), 0);
        assert!((h.values()[peak] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negated_signal_hits_minus_one() {
        let s = SampledSignal::new(noise(9, 300), 8000.0).unwrap();
        let neg = SampledSignal::new(s.samples().iter().map(|v| -v).collect(), 8000.0).unwrap();
        let h = xcorr_normalized(&s, &neg).unwrap();
        let peak = h.peak_index();
        assert_eq!(h.lag_at(peak), 0);
        assert!((h.values()[peak] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn impulses_peak_at_their_offset() {
        let mut a = vec![0.0; 64];
        let mut b = vec![0.0; 64];
        a[0] = 1.0;
        b[10] = 1.0;
        let f = SampledSignal::new(a, 8000.0).unwrap();
        let g = SampledSignal::new(b, 8000.0).unwrap();
        let h = xcorr_normalized(&f, &g).unwrap();
        let peak = h.peak_index();
        assert_eq!(h.lag_at(peak), 10);
        assert!((h.values()[peak] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_schwarz_bound_holds() {
        let f = SampledSignal::new(noise(11, 700), 8000.0).unwrap();
        let g = SampledSignal::new(noise(13, 900), 8000.0).unwrap();
        let h = xcorr_normalized(&f, &g).unwrap();
        for v in h.values() {
            assert!(v.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn align_recovers_zero_padded_delay() {
        let base = noise(21, 800);
        let mut delayed = vec![0.0; 100];
        delayed.extend_from_slice(&base);
        let f = SampledSignal::new(base.clone(), 8000.0).unwrap();
        let g = SampledSignal::new(delayed, 8000.0).unwrap();
        let (shift, fa, ga) = align(&f, &g).unwrap();
        assert_eq!(shift, 100);
        assert_eq!(fa.len(), ga.len());
        for (a, b) in fa.samples().iter().zip(ga.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn align_identical_signals_is_zero_shift() {
        let f = SampledSignal::new(noise(33, 512), 8000.0).unwrap();
        let (shift, _, _) = align(&f, &f).unwrap();
        assert_eq!(shift, 0);
    }

    #[test]
    fn align_finds_embedded_chirp_against_brute_force() {
        // Two noise beds sharing a chirp offset by 250 samples.
        let rate = 8000.0;
        let chirp: Vec<f64> = (0..400)
            .map(|i| {
                let t = i as f64 / rate;
                (2.0 * std::f64::consts::PI * (300.0 + 4000.0 * t) * t).sin()
            })
            .collect();
        let mut a = noise(41, 2000);
        let mut b = noise(43, 2000);
        for v in a.iter_mut() {
            *v *= 0.2;
        }
        for v in b.iter_mut() {
            *v *= 0.2;
        }
        for (i, &c) in chirp.iter().enumerate() {
            a[500 + i] += c;
            b[750 + i] += c;
        }
        let f = SampledSignal::new(a, rate).unwrap();
        let g = SampledSignal::new(b, rate).unwrap();

        // Brute-force oracle over every lag.
        let mut best = (0isize, f64::NEG_INFINITY);
        for lag in -(g.len() as isize - 1)..(f.len() as isize) {
            let mut acc = 0.0;
            for t in 0..f.len() {
                let gi = t as isize + lag;
                if gi >= 0 && (gi as usize) < g.len() {
                    acc += f.samples()[t] * g.samples()[gi as usize];
                }
            }
            if acc > best.1 {
                best = (lag, acc);
            }
        }
        assert_eq!(best.0, 250, "oracle must agree with the construction");

        let (shift, _, _) = align(&f, &g).unwrap();
        assert_eq!(shift, 250);
    }
}
