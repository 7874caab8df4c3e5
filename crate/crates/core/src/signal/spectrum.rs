//! FFT helpers. Plans are cached per thread.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, unnormalized.
pub fn fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place inverse DFT, scaled by 1/N so that `ifft(fft(x)) == x`.
pub fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
}

pub fn fft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Signed frequency of DFT bin `k` for an `n`-point transform at `fs`.
pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k * fs / n as f64
}

/// Circular cross-correlation `c[d] = sum_n x[n + d] * conj(r[n])`.
pub fn circular_xcorr(x: &[Complex64], r: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(x.len(), r.len());
    let mut xf = x.to_vec();
    let mut rf = r.to_vec();
    fft(&mut xf);
    fft(&mut rf);
    for (a, b) in xf.iter_mut().zip(&rf) {
        *a *= b.conj();
    }
    ifft(&mut xf);
    xf
}

/// DFT of the kernel `h` placed circularly around index 0 on an `n`-point
/// grid, so that filtering with it introduces no delay.
pub fn centered_kernel_spectrum(h: &[Complex64], n: usize) -> Vec<Complex64> {
    let mid = h.len() / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in h.iter().enumerate() {
        buf[(j + n * (mid / n + 1) - mid) % n] += v;
    }
    fft(&mut buf);
    buf
}

/// Circular convolution with a kernel spectrum from [`centered_kernel_spectrum`].
pub fn convolve_spectrum(x: &[Complex64], h_spec: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(x.len(), h_spec.len());
    let mut buf = x.to_vec();
    fft(&mut buf);
    buf.iter_mut().zip(h_spec).for_each(|(a, b)| *a *= b);
    ifft(&mut buf);
    buf
}

/// Power of a single DFT bin of a real sequence, normalized so that a unit
/// amplitude cosine on an exact bin reports 0.5 (its mean power).
pub fn tone_power(x: &[f64], bin: usize) -> f64 {
    let n = x.len() as f64;
    let w = -2.0 * std::f64::consts::PI * bin as f64 / n;
    let acc: Complex64 = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::from_polar(v, w * i as f64))
        .sum();
    2.0 * (acc.norm() / n).powi(2)
}
