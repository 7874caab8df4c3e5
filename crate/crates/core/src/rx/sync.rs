//! Frame synchronization by sub-band noncoherent correlation.
//!
//! The received frame is correlated with the known training waveform
//! separately in 1 GHz slices of the spectrum, and the slice magnitudes are
//! summed. Each slice sees an almost flat channel, so the metric peaks at the
//! true delay whatever phase or sign the channel imposes per slice, which a
//! plain time-domain correlation does not survive under power fading.

use num_complex::Complex64;

use super::FrameDescriptor;
use crate::error::{Error, Result};
use crate::signal::spectrum::{fft, ifft};
use crate::signal::Waveform;

/// Width of one correlation slice.
const SLICE_HZ: f64 = 1e9;
/// Minimum normalized correlation for a valid lock.
pub const SYNC_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncInfo {
    /// Sample at which the frame starts in the capture.
    pub offset: usize,
    /// Normalized correlation at the peak, in `[0, 1]`.
    pub peak: f64,
    /// Sign of the wideband correlation at the peak.
    pub inverted: bool,
}

/// Offset of the frame start in `rx`; the capture holds one frame period.
pub fn synchronize(rx: &Waveform, fd: &FrameDescriptor) -> Result<usize> {
    Ok(synchronize_detailed(rx, fd)?.offset)
}

pub fn synchronize_detailed(rx: &Waveform, fd: &FrameDescriptor) -> Result<SyncInfo> {
    let n = fd.frame_len();
    if rx.len() < n {
        return Err(Error::framing(format!("capture of {} samples is shorter than the {n}-sample frame", rx.len())));
    }
    if (rx.sample_rate() - fd.sample_rate).abs() > 1e-6 * fd.sample_rate {
        return Err(Error::framing("capture and frame sample rates differ"));
    }
    let l = fd.reference.len();
    let mut x: Vec<Complex64> = rx.samples()[..n].iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    for (a, &b) in r.iter_mut().zip(&fd.reference) {
        *a = Complex64::new(b, 0.0);
    }
    fft(&mut x);
    fft(&mut r);
    let slice_bins = ((SLICE_HZ / fd.sample_rate * n as f64).round() as usize).max(1);
    let half = n / 2;
    let frac = (l as f64 / n as f64).sqrt();
    let mut metric = vec![0.0; n];
    let mut wide = vec![Complex64::new(0.0, 0.0); n];
    let mut denom = 0.0;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut start = 1;
    while start <= half {
        let end = (start + slice_bins).min(half + 1);
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let (mut er, mut ex) = (0.0, 0.0);
        for k in start..end {
            let p = x[k] * r[k].conj();
            buf[k] = p;
            wide[k] = p;
            er += r[k].norm_sqr();
            ex += x[k].norm_sqr();
        }
        // Analytic (one-sided) slice: its magnitude is the slice envelope.
        ifft(&mut buf);
        metric.iter_mut().zip(&buf).for_each(|(m, c)| *m += c.norm());
        denom += (er * ex).sqrt();
        start = end;
    }
    if denom == 0.0 {
        return Err(Error::Sync { peak: 0.0 });
    }
    // Normalize by the slice norms, with the received energy scaled down to
    // the fraction of the frame the reference spans.
    let scale = 1.0 / (denom / n as f64 * frac);
    let (offset, best) = metric
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let peak = (best * scale).min(1.0);
    if !(peak >= SYNC_THRESHOLD) {
        return Err(Error::Sync { peak });
    }
    ifft(&mut wide);
    let inverted = wide[offset].re < 0.0;
    Ok(SyncInfo { offset, peak, inverted })
}

/// Rotates a capture so that its frame starts at sample 0.
pub fn align(rx: &Waveform, offset: usize) -> Waveform {
    let n = rx.len();
    rx.rotated((n - offset % n) % n)
}
