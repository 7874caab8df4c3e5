//! Pulse shaping, frequency-domain filtering and resampling.
//!
//! Frames in this simulator are periodic (the DAC replays its memory), so
//! channel filtering and resampling are done circularly in the frequency
//! domain. [`fir_filter`] is the linear, zero-padded alternative for
//! one-shot sequences.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spectrum::{bin_frequency, fft, ifft};
use super::Waveform;
use crate::error::{Error, Result};

/// Continuous root-raised-cosine impulse response, `t` in symbol periods,
/// with unit peak normalization `p(0) = 1 - rolloff + 4 rolloff / pi`.
pub fn rrc_value(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// Unit-energy RRC taps spanning `span` symbols at `sps` samples per symbol.
pub fn rrc_taps(rolloff: f64, span: usize, sps: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::config(format!("RRC rolloff {rolloff} outside (0, 1]")));
    }
    if span < 4 || sps < 2 {
        return Err(Error::config(format!("RRC needs span >= 4 and sps >= 2, got {span}, {sps}")));
    }
    let n = span * sps + 1;
    let mid = (n / 2) as f64;
    let mut taps: Vec<f64> = (0..n).map(|i| rrc_value((i as f64 - mid) / sps as f64, rolloff)).collect();
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= norm);
    Ok(taps)
}

/// Linear convolution with zero padding, trimmed so that output sample `i`
/// is aligned with input sample `i` (group delay `(taps - 1) / 2` removed).
pub fn fir_filter(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = taps.len().saturating_sub(1) / 2;
    (0..x.len())
        .map(|i| {
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let k = i + delay;
                if k >= j && k - j < x.len() {
                    acc += h * x[k - j];
                }
            }
            acc
        })
        .collect()
}

/// Multiplies the spectrum of `w` by `h(f)` (circular filtering). For
/// electrical waveforms `h` must satisfy `h(-f) = conj(h(f))`; the result is
/// projected back onto the real axis.
pub fn circular_filter(w: &Waveform, h: impl Fn(f64) -> Complex64) -> Result<Waveform> {
    let n = w.len();
    let fs = w.sample_rate();
    let mut buf = w.samples().to_vec();
    fft(&mut buf);
    for (k, x) in buf.iter_mut().enumerate() {
        *x *= h(bin_frequency(k, n, fs));
    }
    if w.is_real() && n % 2 == 0 {
        // The Nyquist bin of a real signal must stay real.
        buf[n / 2] = Complex64::new(buf[n / 2].re, 0.0);
    }
    ifft(&mut buf);
    w.with_samples(buf)
}

/// Normalized 4th-order Bessel low-pass response with -3 dB at `f3db`.
///
/// The constant group delay at DC is removed, so the passband is close to
/// zero-phase and filtering does not shift the signal in time.
pub fn bessel4_response(f: f64, f3db: f64) -> Complex64 {
    // 4th-order delay-normalized Bessel; its -3 dB point sits at w = 2.11391767.
    const W3DB: f64 = 2.113_917_674_904_216;
    let w = W3DB * f / f3db;
    let s = Complex64::new(0.0, w);
    let s2 = s * s;
    let den = s2 * s2 + 10.0 * s2 * s + 45.0 * s2 + 105.0 * s + 105.0;
    Complex64::new(105.0, 0.0) / den * Complex64::from_polar(1.0, w)
}

/// Band-limited rational resampling by `p / q`.
///
/// Implemented as exact periodic (DFT-domain) interpolation: the spectrum is
/// zero-padded or truncated at the lower of the two Nyquist frequencies,
/// which is the ideal anti-alias filter for a periodic frame. Inputs whose
/// length is not a multiple of `q` are zero-padded to the next multiple.
pub fn resample(w: &Waveform, p: usize, q: usize) -> Result<Waveform> {
    if p == 0 || q == 0 {
        return Err(Error::config("resampling factors must be at least 1"));
    }
    if p == q {
        return Ok(w.clone());
    }
    let mut x = w.samples().to_vec();
    let n = x.len().div_ceil(q) * q;
    x.resize(n, Complex64::new(0.0, 0.0));
    let m = n / q * p;
    fft(&mut x);
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let k = n.min(m);
    let half = k / 2;
    // Bins strictly inside the shared band.
    let pos = if k % 2 == 0 { half } else { half + 1 };
    for i in 0..pos {
        y[i] = x[i];
    }
    for i in 1..=(k - pos) {
        if k % 2 == 0 && i == half {
            continue;
        }
        y[m - i] = x[n - i];
    }
    if k % 2 == 0 {
        if m > n {
            // Upsampling: split the old Nyquist bin.
            y[half] = x[half] * 0.5;
            y[m - half] = x[half] * 0.5;
        } else {
            // Downsampling: fold both halves onto the new Nyquist bin.
            y[half] = x[half] + x[n - half];
        }
    }
    let gain = m as f64 / n as f64;
    y.iter_mut().for_each(|v| *v *= gain);
    ifft(&mut y);
    Waveform::from_complex(y, w.sample_rate() * p as f64 / q as f64, w.domain())
}

#[cfg(test)]
fn nearest_bin(f: f64, n: usize, fs: f64) -> usize {
    let k = (f / fs * n as f64).round() as i64;
    k.rem_euclid(n as i64) as usize
}
