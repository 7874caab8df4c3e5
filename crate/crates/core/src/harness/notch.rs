use std::f64::consts::PI;

use rayon::prelude::*;

use crate::channel::{dac, dcm, ddmzm_modulate, drive_signal, fiber_cd, optical_filter, photodiode, LinkConfig};
use crate::error::{Error, Result};
use crate::signal::spectrum::tone_power;
use crate::signal::Waveform;

/// RMS drive of the probe tone, in units of V_pi: small enough to stay in
/// the linear range of the modulator.
const PROBE_DRIVE: f64 = 0.02;

/// Detected power (dB) of a small modulation tone swept from `f_start` to
/// `f_stop` in steps of `step` through the noiseless optical chain.
pub fn notch_probe(link: &LinkConfig, dac_rate: f64, f_start: f64, f_stop: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    link.validate()?;
    if !(step > 0.0 && f_start > 0.0 && f_stop >= f_start && f_stop < dac_rate / 2.0) {
        return Err(Error::config("tone sweep must lie between DC and the DAC Nyquist frequency"));
    }
    let n = (dac_rate / step).round() as usize;
    if ((n as f64) * step - dac_rate).abs() > 1e-6 * dac_rate {
        return Err(Error::config("the DAC rate must be a multiple of the tone step"));
    }
    let k0 = (f_start / step).round() as usize;
    let k1 = (f_stop / step).round() as usize;
    (k0..=k1)
        .into_par_iter()
        .map(|k| {
            let x = (0..n).map(|i| (2.0 * PI * (k * i) as f64 / n as f64).cos()).collect();
            let w = Waveform::real(x, dac_rate)?;
            let drive = drive_signal(&dac(&w, link)?, PROBE_DRIVE, link)?;
            let mut e = ddmzm_modulate(&drive, link.mzm_bias, link.vpi)?;
            let center = -link.laser_detuning_hz;
            e = optical_filter(&e, center, link.mux_passband_hz, link.mux_order)?;
            e = fiber_cd(&e, link.fiber_length_km, link.dispersion_ps_nm_km, link.wavelength_nm)?;
            if link.dcm_enabled {
                e = dcm(&e, link)?;
            }
            e = optical_filter(&e, center, link.mux_passband_hz, link.mux_order)?;
            let i = photodiode(&e)?;
            let p = tone_power(&i.real_samples(), k);
            Ok((k as f64 * step, 10.0 * p.max(1e-300).log10()))
        })
        .collect()
}

/// Response value at `f` (nearest swept frequency).
pub fn response_at(resp: &[(f64, f64)], f: f64) -> Option<f64> {
    resp.iter().min_by(|a, b| (a.0 - f).abs().total_cmp(&(b.0 - f).abs())).map(|p| p.1)
}

/// Frequencies of the nulls of a swept response: local minima at least
/// `depth_db` below the highest point within `window` on either side,
/// refined by fitting a V-shaped amplitude through the three nearest points.
pub fn find_nulls(resp: &[(f64, f64)], depth_db: f64, window: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if resp.len() < 3 {
        return out;
    }
    let step = resp[1].0 - resp[0].0;
    let w = ((window / step).round() as usize).max(1);
    for i in 1..resp.len() - 1 {
        let v = resp[i].1;
        if !(v < resp[i - 1].1 && v <= resp[i + 1].1) {
            continue;
        }
        let left = resp[i.saturating_sub(w)..i].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let right = resp[i + 1..(i + 1 + w).min(resp.len())].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if left.min(right) - v < depth_db {
            continue;
        }
        let amp = |db: f64| 10f64.powf(db / 20.0);
        let (am, ap) = (amp(resp[i - 1].1), amp(resp[i + 1].1));
        let x0 = ((am - ap) / (am + ap)).clamp(-0.5, 0.5);
        out.push(resp[i].0 + x0 * step);
    }
    out
}
