//! Windowed-sinc FIR design and zero-delay application.

use crate::error::{CoreError, Result};
use crate::fft::convolve_fft;

use super::SampledSignal;

/// Hamming-windowed lowpass taps. `cutoff` and `transition` are in
/// cycles/sample; the -6 dB point lands at `cutoff`.
pub fn lowpass_fir_taps(cutoff: f64, transition: f64) -> Vec<f64> {
    assert!(cutoff > 0.0 && cutoff < 0.5, "cutoff must be in (0, 0.5)");
    let mut n = (3.3 / transition).ceil() as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let alpha = (n - 1) as f64 / 2.0;
    let omega = 2.0 * std::f64::consts::PI * cutoff;
    (0..n)
        .map(|i| {
            let x = i as f64 - alpha;
            let sinc = if x == 0.0 {
                omega / std::f64::consts::PI
            } else {
                (omega * x).sin() / (std::f64::consts::PI * x)
            };
            let window = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            sinc * window
        })
        .collect()
}

/// Magnitude of the taps' frequency response at `freq_hz`. Serves as the
/// independent oracle for the filter tests.
pub fn tap_response_at(taps: &[f64], freq_hz: f64, rate_hz: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (i, &t) in taps.iter().enumerate() {
        re += t * (omega * i as f64).cos();
        im -= t * (omega * i as f64).sin();
    }
    (re * re + im * im).sqrt()
}

/// Applies a linear-phase FIR and compensates its group delay, so the output
/// has the same length and timing as the input. Edges see zero padding.
pub fn filter_same(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let half = (taps.len() - 1) / 2;
    let full = if n * taps.len() > 1 << 18 {
        convolve_fft(signal, taps)
    } else {
        convolve_direct(signal, taps)
    };
    (0..n).map(|i| full[i + half]).collect()
}

fn convolve_direct(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let total = x.len() + taps.len() - 1;
    let mut out = vec![0.0; total];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &tj) in taps.iter().enumerate() {
            out[i + j] += xi * tj;
        }
    }
    out
}

/// Removes content below `cutoff_hz` with a linear-phase windowed-sinc FIR
/// (spectral inversion of a lowpass), output aligned and equal in length to
/// the input.
pub fn highpass_filter(signal: &SampledSignal, cutoff_hz: f64) -> Result<SampledSignal> {
    let rate = signal.rate_hz();
    if cutoff_hz <= 0.0 || cutoff_hz >= rate / 2.0 {
        return Err(CoreError::InvalidCutoff {
            cutoff_hz,
            rate_hz: rate,
        });
    }
    // Transition band of 0.9 * cutoff keeps cutoff/2 inside the stopband and
    // 2 * cutoff inside the passband.
    let transition = 0.9 * cutoff_hz / rate;
    let mut taps = lowpass_fir_taps(cutoff_hz / rate, transition);
    // Spectral inversion: highpass = delta - lowpass.
    for t in taps.iter_mut() {
        *t = -*t;
    }
    let mid = (taps.len() - 1) / 2;
    taps[mid] += 1.0;

    Ok(SampledSignal::from_trusted(
        filter_same(signal.samples(), &taps),
        rate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq_hz: f64, rate_hz: f64, n: usize) -> SampledSignal {
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq_hz * i as f64 / rate_hz).sin())
            .collect();
        SampledSignal::from_trusted(samples, rate_hz)
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn designed_highpass_taps(cutoff_hz: f64, rate_hz: f64) -> Vec<f64> {
        let transition = 0.9 * cutoff_hz / rate_hz;
        let mut taps = lowpass_fir_taps(cutoff_hz / rate_hz, transition);
        for t in taps.iter_mut() {
            *t = -*t;
        }
        let mid = (taps.len() - 1) / 2;
        taps[mid] += 1.0;
        taps
    }

    #[test]
    fn rejects_cutoff_at_nyquist() {
        let s = sine(10.0, 8000.0, 256);
        assert!(matches!(
            highpass_filter(&s, 4000.0),
            Err(CoreError::InvalidCutoff { .. })
        ));
    }

    #[test]
    fn dc_is_removed() {
        let s = SampledSignal::from_trusted(vec![1.0; 8000], 8000.0);
        let out = highpass_filter(&s, 100.0).unwrap();
        let taps = designed_highpass_taps(100.0, 8000.0);
        let skip = taps.len();
        let mid = &out.samples()[skip..8000 - skip];
        assert!(rms(mid) < 0.01, "residual DC rms {}", rms(mid));
    }

    #[test]
    fn passband_tone_survives() {
        // Oracle first: the designed taps themselves pass 200 Hz.
        let taps = designed_highpass_taps(100.0, 8000.0);
        assert!(tap_response_at(&taps, 200.0, 8000.0) >= 0.9);

        let s = sine(200.0, 8000.0, 16000);
        let out = highpass_filter(&s, 100.0).unwrap();
        assert_eq!(out.len(), s.len());
        let skip = taps.len();
        let ratio = rms(&out.samples()[skip..16000 - skip]) / rms(&s.samples()[skip..16000 - skip]);
        assert!(ratio >= 0.9, "200 Hz amplitude ratio {ratio}");
    }

    #[test]
    fn stopband_tone_attenuated() {
        let taps = designed_highpass_taps(100.0, 8000.0);
        let oracle = tap_response_at(&taps, 50.0, 8000.0);
        assert!(oracle <= 0.1, "oracle says 50 Hz response {oracle}");

        let s = sine(50.0, 8000.0, 16000);
        let out = highpass_filter(&s, 100.0).unwrap();
        let skip = taps.len();
        let ratio = rms(&out.samples()[skip..16000 - skip]) / rms(&s.samples()[skip..16000 - skip]);
        let db = 20.0 * ratio.log10();
        assert!(db <= -20.0, "50 Hz attenuation only {db} dB");
    }
}
