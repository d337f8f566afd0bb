//! Thin wrappers over rustfft for real-signal correlation work.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Cross-correlation c[k] = sum_t f(t) g(t+k) for k in
/// [-(len_f-1), len_g-1], returned with the most negative lag first.
///
/// Direct O(n*m) evaluation; used for short inputs and as the reference for
/// the frequency-domain path.
pub(crate) fn xcorr_direct(f: &[f64], g: &[f64]) -> Vec<f64> {
    let nf = f.len();
    let ng = g.len();
    let total = nf + ng - 1;
    let mut out = vec![0.0; total];
    for (idx, slot) in out.iter_mut().enumerate() {
        let lag = idx as isize - (nf as isize - 1);
        let mut acc = 0.0;
        let t_start = (-lag).max(0) as usize;
        let t_end = nf.min((ng as isize - lag).max(0) as usize);
        for t in t_start..t_end {
            acc += f[t] * g[(t as isize + lag) as usize];
        }
        *slot = acc;
    }
    out
}

/// Same layout as [`xcorr_direct`], computed via the correlation theorem with
/// zero padding so no circular wrap-around occurs.
pub(crate) fn xcorr_fft(f: &[f64], g: &[f64]) -> Vec<f64> {
    let nf = f.len();
    let ng = g.len();
    let total = nf + ng - 1;
    let size = total.next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut fa: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut ga: Vec<Complex<f64>> = g.iter().map(|&x| Complex::new(x, 0.0)).collect();
    ga.resize(size, Complex::new(0.0, 0.0));

    fft.process(&mut fa);
    fft.process(&mut ga);
    for (a, b) in fa.iter_mut().zip(ga.iter()) {
        *a = a.conj() * b;
    }
    ifft.process(&mut fa);

    let scale = 1.0 / size as f64;
    // c[k] for k >= 0 sits at index k; negative lags wrap to the tail.
    (0..total)
        .map(|idx| {
            let lag = idx as isize - (nf as isize - 1);
            let pos = if lag >= 0 { lag as usize } else { size - lag.unsigned_abs() };
            fa[pos].re * scale
        })
        .collect()
}

/// Full linear convolution of `x` with `taps` via FFT.
pub(crate) fn convolve_fft(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let total = x.len() + taps.len() - 1;
    let size = total.next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut xa: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    xa.resize(size, Complex::new(0.0, 0.0));
    let mut ha: Vec<Complex<f64>> = taps.iter().map(|&v| Complex::new(v, 0.0)).collect();
    ha.resize(size, Complex::new(0.0, 0.0));

    fft.process(&mut xa);
    fft.process(&mut ha);
    for (a, b) in xa.iter_mut().zip(ha.iter()) {
        *a *= b;
    }
    ifft.process(&mut xa);

    let scale = 1.0 / size as f64;
    xa[..total].iter().map(|c| c.re * scale).collect()
}

/// Biased autocorrelation r[k] = sum_t x(t) x(t+k) for k in 0..n, via FFT.
pub(crate) fn autocorr(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut xa: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    xa.resize(size, Complex::new(0.0, 0.0));
    fft.process(&mut xa);
    for a in xa.iter_mut() {
        *a = Complex::new(a.norm_sqr(), 0.0);
    }
    ifft.process(&mut xa);
    let scale = 1.0 / size as f64;
    xa[..n].iter().map(|c| c.re * scale).collect()
}
