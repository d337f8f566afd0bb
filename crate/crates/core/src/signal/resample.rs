//! Polyphase rational resampling with a precomputed anti-alias FIR.

use super::filter::lowpass_fir_taps;
use super::SampledSignal;
use crate::error::Result;

/// Best rational approximation l/m of `ratio` with m bounded, via continued
/// fractions.
fn rational_approx(ratio: f64, max_den: u64) -> (u64, u64) {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = ratio;
    loop {
        let a = x.floor() as u64;
        let h2 = a.checked_mul(h1).and_then(|v| v.checked_add(h0));
        let k2 = a.checked_mul(k1).and_then(|v| v.checked_add(k0));
        let (h2, k2) = match (h2, k2) {
            (Some(h), Some(k)) if k <= max_den => (h, k),
            _ => break,
        };
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = x - a as f64;
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    (h1.max(1), k1.max(1))
}

/// Changes the sampling rate to `target_rate_hz`. Downsampling applies an
/// anti-alias lowpass at half the lower rate first; output length is
/// `round(len * target/source)` within one sample.
pub fn resample(signal: &SampledSignal, target_rate_hz: f64) -> Result<SampledSignal> {
    assert!(target_rate_hz > 0.0, "target rate must be positive");
    let source = signal.rate_hz();
    if (target_rate_hz - source).abs() < 1e-9 * source {
        return Ok(signal.clone());
    }
    let ratio = target_rate_hz / source;
    let (up, down) = rational_approx(ratio, 10_000);
    let (up, down) = {
        let g = gcd(up, down);
        (up / g, down / g)
    };

    // Anti-alias design happens at the upsampled rate source*up; the cutoff
    // sits at half the lower of the two rates with a 0.4*cutoff transition so
    // 1.25x the cutoff is fully in the stopband.
    let upsampled_rate = source * up as f64;
    let cutoff_hz = source.min(target_rate_hz) / 2.0;
    let cutoff = cutoff_hz / upsampled_rate;
    let transition = 0.4 * cutoff;
    let mut taps = lowpass_fir_taps(cutoff, transition);
    for t in taps.iter_mut() {
        *t *= up as f64;
    }
    let delay = (taps.len() - 1) / 2;

    let x = signal.samples();
    let out_len = (x.len() as f64 * ratio).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len as u64 {
        // Position on the upsampled grid, group delay compensated.
        let pos = m * down + delay as u64;
        // Only taps t with (pos - t) % up == 0 touch a real input sample.
        let first_t = (pos % up) as usize;
        let mut acc = 0.0;
        let mut t = first_t;
        while t < taps.len() && t as u64 <= pos {
            let k = (pos - t as u64) / up;
            if (k as usize) < x.len() {
                acc += taps[t] * x[k as usize];
            }
            t += up as usize;
        }
        out.push(acc);
    }
    Ok(SampledSignal::from_trusted(out, target_rate_hz))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq_hz: f64, rate_hz: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq_hz * i as f64 / rate_hz).sin())
            .collect()
    }

    /// Goertzel-style single-bin magnitude, the spectral oracle for tests.
    fn tone_magnitude(x: &[f64], freq_hz: f64, rate_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (i, &v) in x.iter().enumerate() {
            re += v * (omega * i as f64).cos();
            im += v * (omega * i as f64).sin();
        }
        2.0 * (re * re + im * im).sqrt() / x.len() as f64
    }

    #[test]
    fn rational_approx_finds_exact_ratios() {
        assert_eq!(rational_approx(8000.0 / 64000.0, 10_000), (1, 8));
        assert_eq!(rational_approx(8000.0 / 44100.0, 10_000), (80, 441));
    }

    #[test]
    fn length_arithmetic_64k_to_8k() {
        let s = SampledSignal::new(vec![0.25; 64000], 64000.0).unwrap();
        let out = resample(&s, 8000.0).unwrap();
        assert!((out.len() as i64 - 8000).abs() <= 1, "len {}", out.len());
        assert_eq!(out.rate_hz(), 8000.0);
    }

    #[test]
    fn identity_when_rates_match() {
        let s = SampledSignal::new(tone(440.0, 8000.0, 4000), 8000.0).unwrap();
        let out = resample(&s, 8000.0).unwrap();
        for (a, b) in s.samples().iter().zip(out.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn downsample_keeps_1khz_kills_5khz() {
        let rate = 44100.0;
        let n = 44100;
        let mut x = tone(1000.0, rate, n);
        let five = tone(5000.0, rate, n);
        for (a, b) in x.iter_mut().zip(five) {
            *a += b;
        }
        let s = SampledSignal::new(x, rate).unwrap();
        let out = resample(&s, 8000.0).unwrap();

        // Skip filter edges before measuring.
        let trimmed = &out.samples()[500..out.len() - 500];
        let in_trim = &s.samples()[2756..s.len() - 2756];
        let kept = tone_magnitude(trimmed, 1000.0, 8000.0)
            / tone_magnitude(in_trim, 1000.0, rate);
        assert!(kept >= 0.9, "1 kHz ratio {kept}");

        // 5 kHz aliases to 3 kHz after decimation; both images must be gone.
        let leak = tone_magnitude(trimmed, 3000.0, 8000.0)
            / tone_magnitude(in_trim, 5000.0, rate);
        let db = 20.0 * leak.log10();
        assert!(db <= -30.0, "5 kHz image only {db} dB down");
    }

    #[test]
    fn round_trip_preserves_band_limited_content() {
        let rate = 8000.0;
        let n = 16000;
        let mut x = vec![0.0; n];
        for &f in &[300.0, 900.0, 2200.0] {
            for (i, v) in x.iter_mut().enumerate() {
                *v += (2.0 * std::f64::consts::PI * f * i as f64 / rate).sin() / 3.0;
            }
        }
        let s = SampledSignal::new(x, rate).unwrap();
        let up = resample(&s, 12000.0).unwrap();
        let back = resample(&up, 8000.0).unwrap();
        let m = s.len().min(back.len());
        let lo = 1200;
        let hi = m - 1200;
        let mut err = 0.0;
        let mut sig = 0.0;
        for i in lo..hi {
            let d = s.samples()[i] - back.samples()[i];
            err += d * d;
            sig += s.samples()[i] * s.samples()[i];
        }
        let db = 10.0 * (err / sig).log10();
        assert!(db <= -30.0, "round-trip residual {db} dB");
    }
}
