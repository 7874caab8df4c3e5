//! Physical IM/DD link: DAC, push-pull MZM, MUX/DEMUX filters with laser
//! detuning, linear fibre dispersion, optional DCM, ASE loading to a target
//! OSNR, square-law detection, PIN/TIA noise and ADC.
//!
//! All operations treat a frame as one period of a periodic signal (the DAC
//! replays its memory), so every filter is a circular DFT-domain product.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stage};
use crate::signal::{bessel4_response, circular_filter, resample, Domain, Waveform};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// OSNR reference bandwidth (0.1 nm at 1550 nm).
pub const OSNR_REF_BW: f64 = 12.5e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub dac_bits: u32,
    pub dac_bandwidth_hz: f64,
    pub modulator_bandwidth_hz: f64,
    pub mzm_bias: f64,
    pub vpi: f64,
    pub mux_passband_hz: f64,
    pub mux_order: u32,
    pub laser_detuning_hz: f64,
    pub fiber_length_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub wavelength_nm: f64,
    pub osnr_db: f64,
    /// Without ASE the OSNR is infinite.
    pub ase_enabled: bool,
    pub dcm_enabled: bool,
    pub dcm_residual_ps_nm: f64,
    pub pd_responsivity: f64,
    /// Thermal noise RMS relative to the received AC signal RMS.
    pub tia_noise_rms: f64,
    pub adc_bits: u32,
    pub adc_bandwidth_hz: f64,
    /// ADC rate; the format's DAC rate when absent.
    pub adc_rate_hz: Option<f64>,
    /// Internal simulation rate as a multiple of the DAC rate.
    pub oversample_factor: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            dac_bits: 8,
            dac_bandwidth_hz: 20e9,
            modulator_bandwidth_hz: 27e9,
            mzm_bias: 0.5,
            vpi: 1.0,
            mux_passband_hz: 39e9,
            mux_order: 3,
            laser_detuning_hz: 0.0,
            fiber_length_km: 0.0,
            dispersion_ps_nm_km: 17.0,
            wavelength_nm: 1550.0,
            osnr_db: 30.0,
            ase_enabled: true,
            dcm_enabled: false,
            dcm_residual_ps_nm: 0.0,
            pd_responsivity: 1.0,
            tia_noise_rms: 0.01,
            adc_bits: 8,
            adc_bandwidth_hz: 25e9,
            adc_rate_hz: None,
            oversample_factor: 2,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ase_enabled && !self.osnr_db.is_finite() {
            return Err(Error::config("OSNR must be finite; disable ASE for a noiseless link"));
        }
        if !(self.fiber_length_km >= 0.0) {
            return Err(Error::config("fibre length must be non-negative"));
        }
        if !(self.laser_detuning_hz.abs() <= 25e9) {
            return Err(Error::config(format!(
                "laser detuning {} Hz leaves the 50 GHz grid slot",
                self.laser_detuning_hz
            )));
        }
        if self.dac_bits == 0 || self.dac_bits > 24 || self.adc_bits == 0 || self.adc_bits > 24 {
            return Err(Error::config("converter resolution must be 1..=24 bits"));
        }
        if self.oversample_factor == 0 {
            return Err(Error::config("oversampling factor must be at least 1"));
        }
        for (name, v) in [
            ("dac_bandwidth_hz", self.dac_bandwidth_hz),
            ("modulator_bandwidth_hz", self.modulator_bandwidth_hz),
            ("mux_passband_hz", self.mux_passband_hz),
            ("adc_bandwidth_hz", self.adc_bandwidth_hz),
            ("vpi", self.vpi),
            ("pd_responsivity", self.pd_responsivity),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.mux_order == 0 {
            return Err(Error::config("super-Gaussian order must be at least 1"));
        }
        if !(self.tia_noise_rms >= 0.0) {
            return Err(Error::config("TIA noise must be non-negative"));
        }
        if let Some(r) = self.adc_rate_hz {
            if !(r > 0.0) {
                return Err(Error::config("ADC rate must be positive"));
            }
        }
        Ok(())
    }

    /// Accumulated fibre dispersion in ps/nm.
    pub fn accumulated_dispersion(&self) -> f64 {
        self.dispersion_ps_nm_km * self.fiber_length_km
    }
}

/// Mid-rise uniform quantizer over the signal's own `[min, max]` range.
pub fn quantize(x: &[f64], bits: u32) -> Vec<f64> {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return x.to_vec();
    }
    let levels = (1u64 << bits) as f64;
    let step = (hi - lo) / levels;
    x.iter()
        .map(|&v| {
            let i = ((v - lo) / step).floor().clamp(0.0, levels - 1.0);
            lo + (i + 0.5) * step
        })
        .collect()
}

fn require(w: &Waveform, domain: Domain, what: &str) -> Result<()> {
    if w.domain() != domain {
        return Err(Error::config(format!("{what} expects a {domain:?} waveform")));
    }
    Ok(())
}

/// Quantizes, upsamples to the internal grid and applies the DAC response.
pub fn dac(w: &Waveform, cfg: &LinkConfig) -> Result<Waveform> {
    require(w, Domain::ElectricalReal, "dac")?;
    let q = Waveform::real(quantize(&w.real_samples(), cfg.dac_bits), w.sample_rate())?;
    let up = resample(&q, cfg.oversample_factor, 1)?;
    let bw = cfg.dac_bandwidth_hz;
    circular_filter(&up, |f| bessel4_response(f, bw))
}

/// Chirp-free push-pull MZM: `E = cos(pi/2 (bias + drive / vpi))`.
pub fn ddmzm_modulate(drive: &Waveform, bias_fraction: f64, vpi: f64) -> Result<Waveform> {
    require(drive, Domain::ElectricalReal, "ddmzm_modulate")?;
    let x = drive.real_samples();
    if x.iter().any(|v| v.abs() > vpi) {
        log::warn!("MZM drive exceeds V_pi (over-modulation)");
    }
    let e = x
        .iter()
        .map(|&v| Complex64::new((PI / 2.0 * (bias_fraction + v / vpi)).cos(), 0.0))
        .collect();
    Waveform::optical(e, drive.sample_rate())
}

/// Field response of a super-Gaussian filter whose power transfer is
/// `exp(-ln2 (2 (f - center) / passband)^(2 order))`.
pub fn super_gaussian_field(f: f64, center_offset_hz: f64, passband_hz: f64, order: u32) -> f64 {
    let x = 2.0 * (f - center_offset_hz) / passband_hz;
    (-0.5 * LN_2 * x.powi(2 * order as i32)).exp()
}

pub fn optical_filter(e: &Waveform, center_offset_hz: f64, passband_hz: f64, order: u32) -> Result<Waveform> {
    require(e, Domain::OpticalEnvelope, "optical_filter")?;
    circular_filter(e, |f| Complex64::new(super_gaussian_field(f, center_offset_hz, passband_hz, order), 0.0))
}

/// All-pass dispersion of `ps_per_nm` accumulated at `wavelength_nm`.
pub fn apply_dispersion(e: &Waveform, ps_per_nm: f64, wavelength_nm: f64) -> Result<Waveform> {
    require(e, Domain::OpticalEnvelope, "dispersion")?;
    if ps_per_nm == 0.0 {
        return Ok(e.clone());
    }
    let d = ps_per_nm * 1e-3; // s/m
    let lambda = wavelength_nm * 1e-9;
    let k = PI * d * lambda * lambda / SPEED_OF_LIGHT;
    circular_filter(e, |f| Complex64::from_polar(1.0, -k * f * f))
}

pub fn fiber_cd(e: &Waveform, length_km: f64, d_ps_nm_km: f64, wavelength_nm: f64) -> Result<Waveform> {
    apply_dispersion(e, length_km * d_ps_nm_km, wavelength_nm)
}

/// Ideal dispersion compensation leaving `dcm_residual_ps_nm` behind.
pub fn dcm(e: &Waveform, cfg: &LinkConfig) -> Result<Waveform> {
    apply_dispersion(e, -(cfg.accumulated_dispersion() - cfg.dcm_residual_ps_nm), cfg.wavelength_nm)
}

/// Adds single-polarization ASE so that `P_sig / (N0 * 12.5 GHz)` equals the
/// requested OSNR.
pub fn set_osnr<R: Rng>(e: &Waveform, osnr_db: f64, rng: &mut R) -> Result<Waveform> {
    require(e, Domain::OpticalEnvelope, "set_osnr")?;
    let p = e.power();
    if !(p > 0.0) {
        return Err(Error::Measurement("OSNR needs a positive signal power".into()));
    }
    if osnr_db == f64::INFINITY {
        return Ok(e.clone());
    }
    let n0 = p / (10f64.powf(osnr_db / 10.0) * OSNR_REF_BW);
    let sigma = (n0 * e.sample_rate() / 2.0).sqrt();
    let out = e
        .samples()
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex64::new(re, im) * sigma
        })
        .collect();
    e.with_samples(out)
}

/// Adds real white Gaussian noise of standard deviation `sigma` per sample
/// to an electrical waveform.
pub fn add_awgn<R: Rng>(w: &Waveform, sigma: f64, rng: &mut R) -> Result<Waveform> {
    require(w, Domain::ElectricalReal, "add_awgn")?;
    if !(sigma >= 0.0) {
        return Err(Error::config("noise deviation must be non-negative"));
    }
    let out = w
        .samples()
        .iter()
        .map(|&x| {
            let v: f64 = rng.sample(StandardNormal);
            x + v * sigma
        })
        .collect();
    w.with_samples(out)
}

/// Square-law detection with unit responsivity.
pub fn photodiode(e: &Waveform) -> Result<Waveform> {
    require(e, Domain::OpticalEnvelope, "photodiode")?;
    Waveform::real(e.samples().iter().map(|x| x.norm_sqr()).collect(), e.sample_rate())
}

fn rational(out: f64, input: f64) -> Result<(usize, usize)> {
    let a = out.round() as u64;
    let b = input.round() as u64;
    if a == 0 || b == 0 || (a as f64 - out).abs() > 1e-3 || (b as f64 - input).abs() > 1e-3 {
        return Err(Error::config(format!("cannot resample {input} Hz to {out} Hz")));
    }
    let g = gcd(a, b);
    Ok(((a / g) as usize, (b / g) as usize))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Receiver front end: thermal noise, low-pass, AC coupling, resampling to
/// `adc_rate` and quantization.
///
/// The noise is shaped by the same receive bandwidth as the signal and
/// scaled so that the output SNR equals `1 / tia_noise_rms^2`.
pub fn pin_tia_adc<R: Rng>(w: &Waveform, adc_rate: f64, cfg: &LinkConfig, rng: &mut R) -> Result<Waveform> {
    require(w, Domain::ElectricalReal, "pin_tia_adc")?;
    let (p, q) = rational(adc_rate, w.sample_rate())?;
    let bw = cfg.adc_bandwidth_hz;
    let lp = |f: f64| bessel4_response(f, bw);
    let scaled = w.scaled(cfg.pd_responsivity);
    let filtered = circular_filter(&scaled, lp)?;
    let mean = filtered.mean().re;
    let x: Vec<f64> = filtered.real_samples().iter().map(|v| v - mean).collect();
    let mut y = Waveform::real(x, w.sample_rate())?;
    y = resample(&y, p, q)?;
    if cfg.tia_noise_rms > 0.0 {
        let n: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
        let noise = resample(&circular_filter(&Waveform::real(n, w.sample_rate())?, lp)?, p, q)?;
        let g = cfg.tia_noise_rms * y.rms() / noise.rms();
        let s: Vec<f64> = y
            .real_samples()
            .iter()
            .zip(noise.real_samples())
            .map(|(a, b)| a + g * b)
            .collect();
        y = Waveform::real(s, y.sample_rate())?;
    }
    let q = quantize(&y.real_samples(), cfg.adc_bits);
    let m = q.iter().sum::<f64>() / q.len() as f64;
    Waveform::real(q.into_iter().map(|v| v - m).collect(), y.sample_rate())
}

/// Scales a transmit waveform to a zero-mean MZM drive of the given RMS (in
/// units of V_pi). The sign is inverted so that intensity follows the data
/// on the falling slope of the quadrature-biased transfer curve.
pub fn drive_signal(w: &Waveform, drive_rms_vpi: f64, cfg: &LinkConfig) -> Result<Waveform> {
    let x = w.real_samples();
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let r = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    let g = if r > 0.0 { -drive_rms_vpi * cfg.vpi / r } else { 0.0 };
    let d = Waveform::real(x.iter().map(|v| (v - m) * g).collect(), w.sample_rate())?;
    let bw = cfg.modulator_bandwidth_hz;
    circular_filter(&d, |f| bessel4_response(f, bw))
}

/// Optical field at the DEMUX output, before detection.
pub fn optical_link(tx: &Waveform, drive_rms_vpi: f64, cfg: &LinkConfig, seed: u64) -> Result<Waveform> {
    cfg.validate()?;
    let analog = dac(tx, cfg)?;
    let drive = drive_signal(&analog, drive_rms_vpi, cfg)?;
    let mut e = ddmzm_modulate(&drive, cfg.mzm_bias, cfg.vpi)?;
    let center = -cfg.laser_detuning_hz;
    e = optical_filter(&e, center, cfg.mux_passband_hz, cfg.mux_order)?;
    e = fiber_cd(&e, cfg.fiber_length_km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm)?;
    if cfg.dcm_enabled {
        e = dcm(&e, cfg)?;
    }
    if cfg.ase_enabled {
        let mut rng = rng_from(derive_seed(seed, &[stage::ASE]));
        e = set_osnr(&e, cfg.osnr_db, &mut rng)?;
    }
    optical_filter(&e, center, cfg.mux_passband_hz, cfg.mux_order)
}

/// Full link from transmit samples (at the DAC rate) to ADC samples.
pub fn simulate_link(tx: &Waveform, drive_rms_vpi: f64, cfg: &LinkConfig, seed: u64) -> Result<Waveform> {
    let e = optical_link(tx, drive_rms_vpi, cfg, seed)?;
    let i = photodiode(&e)?;
    let adc_rate = cfg.adc_rate_hz.unwrap_or(tx.sample_rate());
    let mut rng = rng_from(derive_seed(seed, &[stage::TIA]));
    pin_tia_adc(&i, adc_rate, cfg, &mut rng)
}

/// Link settings that make the chain transparent apart from mild filtering:
/// back-to-back, no noise, 16-bit converters and wide bandwidths.
pub fn ideal_link() -> LinkConfig {
    LinkConfig {
        dac_bits: 16,
        adc_bits: 16,
        dac_bandwidth_hz: 200e9,
        modulator_bandwidth_hz: 200e9,
        adc_bandwidth_hz: 200e9,
        mux_passband_hz: 150e9,
        ase_enabled: false,
        tia_noise_rms: 0.0,
        ..LinkConfig::default()
    }
}

/// Analytic DSB power-fading nulls `sqrt((2k + 1) c / (2 D L lambda^2))`.
pub fn fading_nulls(cfg: &LinkConfig, count: usize) -> Vec<f64> {
    let d = cfg.accumulated_dispersion() * 1e-3;
    let lambda = cfg.wavelength_nm * 1e-9;
    if d == 0.0 {
        return Vec::new();
    }
    (0..count)
        .map(|k| ((2 * k + 1) as f64 * SPEED_OF_LIGHT / (2.0 * d.abs() * lambda * lambda)).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::spectrum::{fft, fft_real, tone_power};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tone(n: usize, fs: f64, bin: usize, amp: f64) -> Waveform {
        let x = (0..n).map(|i| amp * (2.0 * PI * bin as f64 * i as f64 / n as f64).cos()).collect();
        Waveform::real(x, fs).unwrap()
    }

    fn random_field(n: usize, fs: f64, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Waveform::optical(x, fs).unwrap()
    }

    #[test]
    fn dac_is_transparent_at_high_resolution() {
        let cfg = LinkConfig { dac_bits: 16, dac_bandwidth_hz: 1e13, ..Default::default() };
        let w = tone(840, 84e9, 37, 1.0);
        let out = dac(&w, &cfg).unwrap();
        assert_eq!(out.len(), 1680);
        let back = resample(&out, 1, 2).unwrap();
        let err: f64 = back.real_samples().iter().zip(w.real_samples()).map(|(a, b)| (a - b).powi(2)).sum();
        let sig: f64 = w.real_samples().iter().map(|a| a * a).sum();
        assert!(10.0 * (err / sig).log10() < -80.0);
    }

    #[test]
    fn eight_bit_sine_sndr() {
        // Oracle: 6.02 N + 1.76 dB for a full-scale sine.
        let n = 8192;
        let w = tone(n, 1.0, 1001, 1.0);
        let q = quantize(&w.real_samples(), 8);
        let spec = fft_real(&q);
        let sig = spec[1001].norm_sqr() + spec[n - 1001].norm_sqr();
        let rest: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() - sig - spec[0].norm_sqr();
        let sndr = 10.0 * (sig / rest).log10();
        assert!((sndr - 49.92).abs() < 1.0, "{sndr}");
    }

    #[test]
    fn dac_passes_dc() {
        let cfg = LinkConfig::default();
        let w = Waveform::real(vec![0.3; 64], 84e9).unwrap();
        let out = dac(&w, &cfg).unwrap();
        assert!(out.real_samples().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn mzm_transfer_curve() {
        let z = Waveform::real(vec![0.0; 8], 1.0).unwrap();
        let e = ddmzm_modulate(&z, 0.5, 1.0).unwrap();
        assert!(e.samples().iter().all(|x| (x.re - 0.5f64.sqrt()).abs() < 1e-12));
        let full = Waveform::real(vec![-0.5; 4], 1.0).unwrap();
        let e = ddmzm_modulate(&full, 0.5, 1.0).unwrap();
        assert!(e.samples().iter().all(|x| (x.norm_sqr() - 1.0).abs() < 1e-12));
        // Small-signal linearity: intensity = (1 - sin(pi d)) / 2.
        for d in [-0.05, -0.02, 0.01, 0.05] {
            let w = Waveform::real(vec![d], 1.0).unwrap();
            let i = ddmzm_modulate(&w, 0.5, 1.0).unwrap().samples()[0].norm_sqr();
            let lin = 0.5 - PI * d / 2.0;
            assert!(((i - 0.5) / (lin - 0.5) - 1.0).abs() < 0.01, "{d}");
        }
    }

    #[test]
    fn super_gaussian_half_power_edges() {
        for f in [-19.5e9, 19.5e9] {
            assert!((super_gaussian_field(f, 0.0, 39e9, 3).powi(2) - 0.5).abs() < 1e-12);
        }
        let w = random_field(4096, 168e9, 1);
        let narrow = circular_filter(&w, |f| Complex64::new(if f.abs() < 10e9 { 1.0 } else { 0.0 }, 0.0)).unwrap();
        let out = optical_filter(&narrow, 0.0, 39e9, 3).unwrap();
        assert!((10.0 * (out.power() / narrow.power()).log10()).abs() < 0.1);
    }

    #[test]
    fn detuned_filter_suppresses_upper_sideband() {
        // 28 GBd-like DSB spectrum: white field within +-14 GHz.
        let fs = 168e9;
        let n = 16384;
        let w = random_field(n, fs, 2);
        let dsb = circular_filter(&w, |f| Complex64::new(if f.abs() < 14e9 { 1.0 } else { 0.0 }, 0.0)).unwrap();
        let out = optical_filter(&dsb, -20e9, 39e9, 3).unwrap();
        let mut s = out.samples().to_vec();
        fft(&mut s);
        let (mut up, mut lo) = (0.0, 0.0);
        for (k, v) in s.iter().enumerate() {
            let f = crate::signal::spectrum::bin_frequency(k, n, fs);
            if f > 0.0 {
                up += v.norm_sqr();
            } else if f < 0.0 {
                lo += v.norm_sqr();
            }
        }
        assert!(10.0 * (lo / up).log10() >= 10.0, "{}", 10.0 * (lo / up).log10());
    }

    #[test]
    fn dispersion_is_all_pass_and_dcm_inverts_it() {
        let w = random_field(4096, 168e9, 3);
        let cfg = LinkConfig { fiber_length_km: 80.0, ..Default::default() };
        let f = fiber_cd(&w, 80.0, 17.0, 1550.0).unwrap();
        assert!((f.power() / w.power() - 1.0).abs() < 1e-9);
        assert_eq!(fiber_cd(&w, 0.0, 17.0, 1550.0).unwrap(), w);
        let back = dcm(&f, &cfg).unwrap();
        let err = back.samples().iter().zip(w.samples()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / w.len() as f64;
        assert!(err.sqrt() < 1e-9);
        let zero = LinkConfig::default();
        let same = dcm(&w, &zero).unwrap();
        assert_eq!(same, w);
    }

    #[test]
    fn residual_dispersion_equals_short_fibre() {
        let w = random_field(2048, 168e9, 4);
        let cfg = LinkConfig { fiber_length_km: 80.0, dcm_residual_ps_nm: 100.0, ..Default::default() };
        let a = dcm(&fiber_cd(&w, 80.0, 17.0, 1550.0).unwrap(), &cfg).unwrap();
        let b = fiber_cd(&w, 100.0 / 17.0, 17.0, 1550.0).unwrap();
        let err = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn osnr_definition_and_measurement() {
        let n = 1 << 16;
        let fs = 168e9;
        let e = Waveform::optical(vec![Complex64::new(1.0, 0.0); n], fs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = set_osnr(&e, 30.0, &mut rng).unwrap();
        // Periodogram estimate of the noise density away from the carrier.
        let mut s = out.samples().to_vec();
        fft(&mut s);
        let noise: f64 = s[1..].iter().map(|v| v.norm_sqr()).sum::<f64>() / (n as f64).powi(2);
        let n0 = noise / (fs * (n - 1) as f64 / n as f64);
        assert!((n0 * OSNR_REF_BW - 1e-3).abs() < 1e-3 * 0.03);
        let measured = 10.0 * (1.0 / (n0 * OSNR_REF_BW)).log10();
        assert!((measured - 30.0).abs() < 0.1, "{measured}");
        assert_eq!(set_osnr(&e, f64::INFINITY, &mut rng).unwrap(), e);
        let dark = Waveform::optical(vec![Complex64::new(0.0, 0.0); 4], fs).unwrap();
        assert!(matches!(set_osnr(&dark, 20.0, &mut rng), Err(Error::Measurement(_))));
    }

    #[test]
    fn photodiode_square_law() {
        let fs = 64.0;
        let e: Vec<Complex64> = (0..64)
            .map(|i| {
                let t = i as f64 / fs;
                Complex64::from_polar(1.0, 2.0 * PI * 5.0 * t) + Complex64::from_polar(0.5, 2.0 * PI * 12.0 * t)
            })
            .collect();
        let i = photodiode(&Waveform::optical(e, fs).unwrap()).unwrap();
        let x = i.real_samples();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(tone_power(&x, 7) > 0.4);
        let c = photodiode(&Waveform::optical(vec![Complex64::new(0.0, 2.0); 4], 1.0).unwrap()).unwrap();
        assert!(c.real_samples().iter().all(|&v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn receiver_is_transparent_and_ac_coupled() {
        let cfg = ideal_link();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = tone(1680, 168e9, 40, 1.0);
        let offset = Waveform::real(w.real_samples().iter().map(|v| v + 2.0).collect(), 168e9).unwrap();
        let out = pin_tia_adc(&offset, 84e9, &cfg, &mut rng).unwrap();
        assert_eq!(out.len(), 840);
        assert!(out.mean().re.abs() < 1e-9);
        let want = resample(&w, 1, 2).unwrap();
        let err: f64 = out.real_samples().iter().zip(want.real_samples()).map(|(a, b)| (a - b).powi(2)).sum();
        let sig: f64 = want.real_samples().iter().map(|a| a * a).sum();
        assert!(10.0 * (err / sig).log10() < -70.0);
    }

    #[test]
    fn tia_noise_sets_output_snr() {
        let cfg = LinkConfig { tia_noise_rms: 0.01, adc_bits: 16, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 16800;
        let w = tone(n, 168e9, 1000, 1.0);
        let clean = pin_tia_adc(&w, 84e9, &LinkConfig { tia_noise_rms: 0.0, ..cfg.clone() }, &mut rng).unwrap();
        let noisy = pin_tia_adc(&w, 84e9, &cfg, &mut rng).unwrap();
        let err: f64 = noisy.real_samples().iter().zip(clean.real_samples()).map(|(a, b)| (a - b).powi(2)).sum();
        let sig: f64 = clean.real_samples().iter().map(|a| a * a).sum();
        let snr = 10.0 * (sig / err).log10();
        assert!((snr - 40.0).abs() < 0.5, "{snr}");
    }

    #[test]
    fn fading_null_formula() {
        let cfg = LinkConfig { fiber_length_km: 80.0, ..Default::default() };
        let f = fading_nulls(&cfg, 3);
        assert!((f[0] - 6.776e9).abs() < 0.01e9, "{}", f[0]);
        assert!((f[1] / f[0] - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn detuning_bound() {
        assert!(LinkConfig { laser_detuning_hz: 25e9, ..Default::default() }.validate().is_ok());
        assert!(LinkConfig { laser_detuning_hz: 26e9, ..Default::default() }.validate().is_err());
        assert!(LinkConfig { osnr_db: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(LinkConfig { fiber_length_km: -1.0, ..Default::default() }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn dcm_undoes_fiber(km in 0.0f64..120.0, seed in any::<u64>()) {
                let cfg = LinkConfig { fiber_length_km: km, dcm_residual_ps_nm: 0.0, ..LinkConfig::default() };
                let e = random_field(256, 112e9, seed);
                let f = fiber_cd(&e, km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm).unwrap();
                let back = dcm(&f, &cfg).unwrap();
                let err = back.samples().iter().zip(e.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                prop_assert!(err < 1e-9, "{err}");
            }

            #[test]
            fn dispersion_preserves_energy(ps in -2000.0f64..2000.0, seed in any::<u64>()) {
                let e = random_field(256, 112e9, seed);
                let d = apply_dispersion(&e, ps, 1550.0).unwrap();
                let p = |w: &Waveform| w.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
                prop_assert!((p(&d) / p(&e) - 1.0).abs() < 1e-9);
            }

            #[test]
            fn quantizer_levels_and_error(x in proptest::collection::vec(-10.0f64..10.0, 2..200), bits in 1u32..10) {
                let q = quantize(&x, bits);
                let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let step = (hi - lo) / (1u64 << bits) as f64;
                for (a, b) in q.iter().zip(&x) {
                    prop_assert!((a - b).abs() <= step / 2.0 + 1e-9 * (hi - lo).max(1.0));
                }
                let mut levels: Vec<u64> = q.iter().map(|v| v.to_bits()).collect();
                levels.sort_unstable();
                levels.dedup();
                prop_assert!(levels.len() <= 1 << bits);
            }
        }
    }
}
