//! Multi-band CAP transmitter.
//!
//! Each band carries differential QAM on a complex passband pulse
//! `c(t) = rrc(t) exp(j 2 pi f_c t)`; its real and imaginary parts are the
//! in-phase and quadrature shaping filters. The transmitted signal is
//! `sum_b Re{a_b * c_b}`, scaled per band by the loading table.

mod diff_qam;

pub use diff_qam::{diff_qam_decode, diff_qam_encode, DiffQam};
pub(crate) use diff_qam::diff_decode_with;

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmt::{chow_load_capped, table_from_bits, LoadingTable};
use crate::error::{Error, Result};
use crate::rx::{FormatTag, FrameDescriptor};
use crate::signal::spectrum::{centered_kernel_spectrum, convolve_spectrum};
use crate::signal::{map_symbols, prbs_generate, rrc_taps, BitSequence, Constellation, Waveform};

/// Highest bit load a differential QAM band supports.
pub const CAP_MAX_BITS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapConfig {
    pub n_bands: usize,
    pub band_symbol_rate: f64,
    pub dac_rate: f64,
    pub rolloff: f64,
    /// Shaping filter length in symbols.
    pub filter_span: usize,
    /// Explicit band centres in Hz; defaults to `(k + 0.5) * spacing`.
    pub band_centers: Option<Vec<f64>>,
    /// Known QPSK symbols per band ahead of the payload.
    pub training_symbols: usize,
    pub payload_symbols: usize,
    pub target_bits: usize,
    pub gap_db: f64,
    pub ffe_taps: usize,
    pub mma_step: f64,
    /// Passes of the blind equalizer over the band before decisions are kept.
    pub mma_passes: usize,
    pub drive_rms_vpi: f64,
    pub loading_file: Option<PathBuf>,
}

impl Default for CapConfig {
    fn default() -> Self {
        Self {
            n_bands: 12,
            band_symbol_rate: 2e9,
            dac_rate: 80e9,
            rolloff: 0.1,
            filter_span: 32,
            band_centers: None,
            training_symbols: 256,
            payload_symbols: 4096,
            target_bits: 28,
            gap_db: 6.0,
            ffe_taps: 14,
            mma_step: 5e-4,
            mma_passes: 2,
            drive_rms_vpi: 0.14,
            loading_file: None,
        }
    }
}

impl CapConfig {
    pub fn samples_per_symbol(&self) -> Result<usize> {
        let r = self.dac_rate / self.band_symbol_rate;
        if (r - r.round()).abs() > 1e-9 || r.round() < 2.0 || r.round() as usize % 2 != 0 {
            return Err(Error::config(format!(
                "DAC rate {} is not an even multiple of the band symbol rate {}",
                self.dac_rate, self.band_symbol_rate
            )));
        }
        Ok(r.round() as usize)
    }

    pub fn band_spacing(&self) -> f64 {
        self.band_symbol_rate * (1.0 + self.rolloff)
    }

    pub fn band_center(&self, band: usize) -> f64 {
        match &self.band_centers {
            Some(c) => c[band],
            None => (band as f64 + 0.5) * self.band_spacing(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.samples_per_symbol()?;
        if self.n_bands == 0 {
            return Err(Error::config("CAP needs at least one band"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::config(format!("rolloff {} outside [0, 1]", self.rolloff)));
        }
        if self.filter_span < 20 {
            return Err(Error::config("CAP shaping filters need a span of at least 20 symbols"));
        }
        if let Some(c) = &self.band_centers {
            if c.len() != self.n_bands {
                return Err(Error::config(format!("{} band centres for {} bands", c.len(), self.n_bands)));
            }
        }
        let half = self.band_spacing() / 2.0;
        let mut prev_hi = f64::NEG_INFINITY;
        for b in 0..self.n_bands {
            let fc = self.band_center(b);
            if fc - half < -1e-6 || fc + half >= self.dac_rate / 2.0 {
                return Err(Error::config(format!(
                    "band {b} at {fc} Hz does not fit between DC and Nyquist"
                )));
            }
            if fc - half < prev_hi - 1e-6 {
                return Err(Error::config(format!("band {b} overlaps its lower neighbour")));
            }
            prev_hi = fc + half;
        }
        if self.ffe_taps == 0 || !(self.mma_step > 0.0) {
            return Err(Error::config("CAP equalizer needs taps and a positive step"));
        }
        if self.training_symbols < 16 || self.payload_symbols == 0 {
            return Err(Error::config("CAP frame needs at least 16 training symbols and a payload"));
        }
        Ok(())
    }

    /// Symbols per band in one frame: training, differential reference, payload.
    pub fn frame_symbols(&self) -> usize {
        self.training_symbols + 1 + self.payload_symbols
    }

    pub fn bit_rate(&self, bits_per_period: usize) -> f64 {
        bits_per_period as f64 * self.band_symbol_rate
    }
}

/// Complex shaping pulse of `band` (real part in-phase, imaginary part
/// quadrature), normalized so that `sum |c|^2 = 2`.
pub fn cap_pulse(band: usize, cfg: &CapConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if band >= cfg.n_bands {
        return Err(Error::config(format!("band {band} out of range")));
    }
    let sps = cfg.samples_per_symbol()?;
    let rrc = rrc_taps(cfg.rolloff, cfg.filter_span, sps)?;
    let mid = (rrc.len() / 2) as f64;
    let w = 2.0 * PI * cfg.band_center(band) / cfg.dac_rate;
    let c: Vec<Complex64> = rrc
        .iter()
        .enumerate()
        .map(|(i, &g)| Complex64::from_polar(g, w * (i as f64 - mid)))
        .collect();
    let e = c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let g = (2.0 / e).sqrt();
    Ok(c.into_iter().map(|z| z * g).collect())
}

/// In-phase and quadrature filter taps of `band`.
pub fn cap_filter_pair(band: usize, cfg: &CapConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = cap_pulse(band, cfg)?;
    Ok((c.iter().map(|z| z.re).collect(), c.iter().map(|z| z.im).collect()))
}

/// Known QPSK training symbols of `band`.
pub fn cap_training(band: usize, cfg: &CapConfig) -> Result<Vec<Complex64>> {
    let bits = prbs_generate(23, 0x2c_a900 + band as u64 * 7919, 2 * cfg.training_symbols)?;
    map_symbols(&bits, &Constellation::qam(4)?)
}

/// Probe loading: QPSK on every band.
pub fn cap_probe_table(cfg: &CapConfig) -> Result<LoadingTable> {
    LoadingTable::uniform(0, cfg.n_bands, 2)
}

/// Splits a payload into per-band bit blocks, band 0 first.
pub(crate) fn split_bands<'a>(bits: &'a [u8], table: &LoadingTable) -> Result<Vec<&'a [u8]>> {
    let per = table.total_bits_per_symbol();
    if per == 0 || bits.len() % per != 0 {
        return Err(Error::framing(format!(
            "{} bits do not fill whole CAP symbol periods of {per} bits",
            bits.len()
        )));
    }
    let s = bits.len() / per;
    let mut out = Vec::with_capacity(table.len());
    let mut pos = 0;
    for e in table.entries() {
        let n = e.bits as usize * s;
        out.push(&bits[pos..pos + n]);
        pos += n;
    }
    Ok(out)
}

fn check_table(table: &LoadingTable, cfg: &CapConfig) -> Result<()> {
    if table.len() != cfg.n_bands || table.entries().iter().enumerate().any(|(i, e)| e.index != i) {
        return Err(Error::framing(format!(
            "CAP loading must list bands 0..{} in order",
            cfg.n_bands
        )));
    }
    if let Some(e) = table.entries().iter().find(|e| e.bits == 1 || e.bits > CAP_MAX_BITS) {
        return Err(Error::framing(format!("band {} cannot carry {} bits", e.index, e.bits)));
    }
    Ok(())
}

/// Builds a CAP frame. Each band sends training symbols, one differential
/// reference symbol and its share of the payload.
pub fn cap_modulate(bits: &BitSequence, table: &LoadingTable, cfg: &CapConfig) -> Result<(Waveform, FrameDescriptor)> {
    cfg.validate()?;
    check_table(table, cfg)?;
    let blocks = split_bands(bits.bits(), table)?;
    let s = bits.len() / table.total_bits_per_symbol();
    if s != cfg.payload_symbols {
        return Err(Error::framing(format!(
            "payload fills {s} symbols per band, configuration expects {}",
            cfg.payload_symbols
        )));
    }
    let sps = cfg.samples_per_symbol()?;
    let n = cfg.frame_symbols() * sps;
    let per_band: Vec<(Vec<f64>, Vec<Complex64>)> = (0..cfg.n_bands)
        .into_par_iter()
        .map(|b| -> Result<(Vec<f64>, Vec<Complex64>)> {
            let e = table.entries()[b];
            let mut train = cap_training(b, cfg)?;
            let mut symbols = train.clone();
            if e.bits > 0 {
                let order = 1usize << e.bits;
                let mut coded = vec![0u8; e.bits as usize];
                coded.extend_from_slice(blocks[b]);
                let d = diff_qam_encode(&coded, order)?;
                train.push(d[0]);
                symbols.extend(d);
            } else {
                train.push(Complex64::new(0.0, 0.0));
                symbols.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), s + 1));
            }
            let mut up = vec![Complex64::new(0.0, 0.0); n];
            for (k, &a) in symbols.iter().enumerate() {
                up[k * sps] = a * e.power_scale;
            }
            let spec = centered_kernel_spectrum(&cap_pulse(b, cfg)?, n);
            let y = convolve_spectrum(&up, &spec);
            Ok((y.iter().map(|z| z.re).collect(), train))
        })
        .collect::<Result<_>>()?;
    let mut samples = vec![0.0; n];
    let mut training = Vec::with_capacity(cfg.n_bands);
    for (y, t) in per_band {
        samples.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
        training.push(t);
    }
    let train_end = cfg.training_symbols * sps;
    let fd = FrameDescriptor {
        format: FormatTag::Cap,
        training_symbols: training,
        payload_bits: bits.clone(),
        boundaries: vec![0, train_end, n],
        reference: samples[..train_end].to_vec(),
        sample_rate: cfg.dac_rate,
    };
    fd.validate()?;
    Ok((Waveform::real(samples, cfg.dac_rate)?, fd))
}

/// Loads bits over bands from per-band SNR. Differential QAM has no 1-bit
/// alphabet, so any band left with one bit is moved to 0 or 2 bits,
/// whichever costs less energy at the same total.
pub fn cap_load(snr_db: &[f64], target_bits: usize, gap_db: f64) -> Result<LoadingTable> {
    let chow = chow_load_capped(snr_db, target_bits, gap_db, CAP_MAX_BITS)?;
    let mut bits = chow.bits();
    let snr: Vec<f64> = snr_db.iter().map(|s| 10f64.powf(s / 10.0)).collect();
    let cost = |b: &[u32]| -> f64 {
        b.iter()
            .zip(&snr)
            .map(|(&x, &s)| if x == 0 { 0.0 } else { (2f64.powi(x as i32) - 1.0) / s })
            .sum()
    };
    let legal = |x: i64| x == 0 || (2..=CAP_MAX_BITS as i64).contains(&x);
    while let Some(i) = bits.iter().position(|&b| b == 1) {
        let mut best: Option<(f64, Vec<u32>)> = None;
        for j in 0..bits.len() {
            if j == i {
                continue;
            }
            for (di, dj) in [(-1i64, 1i64), (1, -1)] {
                let bi = bits[i] as i64 + di;
                let bj = bits[j] as i64 + dj;
                if !legal(bi) || !legal(bj) {
                    continue;
                }
                let mut cand = bits.clone();
                cand[i] = bi as u32;
                cand[j] = bj as u32;
                let c = cost(&cand);
                if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                    best = Some((c, cand));
                }
            }
        }
        match best {
            Some((_, cand)) => bits = cand,
            None => return Err(Error::config("no band loading avoids single-bit bands")),
        }
    }
    Ok(table_from_bits(&bits, &snr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::spectrum::fft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(n: usize, seed: u64) -> BitSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BitSequence::explicit((0..n).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
    }

    #[test]
    fn default_geometry() {
        let cfg = CapConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.samples_per_symbol().unwrap(), 40);
        assert!((cfg.band_center(0) - 1.1e9).abs() < 1.0);
        assert!(cfg.band_center(11) + cfg.band_spacing() / 2.0 < 40e9);
        assert_eq!(cfg.bit_rate(28), 56e9);
    }

    #[test]
    fn filters_are_an_orthogonal_pair() {
        let cfg = CapConfig::default();
        for b in 0..cfg.n_bands {
            let (fi, fq) = cap_filter_pair(b, &cfg).unwrap();
            assert!(fi.len() >= 20 * 40);
            let dot: f64 = fi.iter().zip(&fq).map(|(a, b)| a * b).sum();
            let ni = fi.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nq = fq.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((dot / (ni * nq)).abs() < 1e-4, "band {b}: {}", dot / (ni * nq));
            assert!((ni * ni + nq * nq - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn in_phase_filter_peaks_at_band_centre() {
        // The raised-cosine passband is flat, so locate its peak region by the
        // midpoint of the half-power extent on a 10 MHz grid.
        let cfg = CapConfig::default();
        for band in [0, 6, 11] {
            let (fi, _) = cap_filter_pair(band, &cfg).unwrap();
            let n = 8000;
            let mut buf: Vec<Complex64> = fi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            buf.resize(n, Complex64::new(0.0, 0.0));
            fft(&mut buf);
            let p: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm_sqr()).collect();
            let peak = p.iter().cloned().fold(0.0, f64::max);
            let lo = p.iter().position(|&v| v >= peak / 2.0).unwrap();
            let hi = p.iter().rposition(|&v| v >= peak / 2.0).unwrap();
            let f = (lo + hi) as f64 / 2.0 * 80e9 / n as f64;
            assert!((f - cfg.band_center(band)).abs() <= 50e6, "band {band}: {f}");
        }
    }

    #[test]
    fn hilbert_pair_spectra() {
        // The quadrature filter is the Hilbert transform of the in-phase one:
        // FFT(f_Q) = -j sgn(f) FFT(f_I) away from DC.
        let cfg = CapConfig::default();
        let (fi, fq) = cap_filter_pair(5, &cfg).unwrap();
        let n = 4096;
        let mut a: Vec<Complex64> = fi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut b: Vec<Complex64> = fq.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        a.resize(n, Complex64::default());
        b.resize(n, Complex64::default());
        fft(&mut a);
        fft(&mut b);
        let peak = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 1..n / 2 {
            let want = a[k] * Complex64::new(0.0, -1.0);
            assert!((b[k] - want).norm() < 1e-3 * peak);
        }
    }

    #[test]
    fn frame_layout_and_errors() {
        let cfg = CapConfig { payload_symbols: 100, ..Default::default() };
        let table = cap_probe_table(&cfg).unwrap();
        let (w, fd) = cap_modulate(&random_bits(2400, 1), &table, &cfg).unwrap();
        assert_eq!(w.len(), (256 + 1 + 100) * 40);
        assert_eq!(fd.training_symbols.len(), 12);
        assert!(fd.training_symbols.iter().all(|t| t.len() == 257));
        assert!(matches!(cap_modulate(&random_bits(2401, 1), &table, &cfg), Err(Error::Framing(_))));
        assert!(cap_modulate(&random_bits(2424, 1), &table, &cfg).is_err());
        let bad = LoadingTable::uniform(0, 12, 1).unwrap();
        assert!(cap_modulate(&random_bits(1200, 1), &bad, &cfg).is_err());
    }

    #[test]
    fn occupied_bandwidth() {
        let cfg = CapConfig { payload_symbols: 2000, ..Default::default() };
        let table = cap_probe_table(&cfg).unwrap();
        let (w, _) = cap_modulate(&random_bits(2000 * 24, 2), &table, &cfg).unwrap();
        let mut buf = w.samples().to_vec();
        fft(&mut buf);
        let n = buf.len();
        let p: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        let mut acc = 0.0;
        let k99 = p.iter().position(|v| {
            acc += v;
            acc >= 0.99 * total
        });
        let f99 = k99.unwrap() as f64 * 80e9 / n as f64;
        let expected = 12.0 * 2e9 * 1.1;
        assert!((f99 - expected).abs() < 0.05 * expected, "{f99}");
    }

    #[test]
    fn band_power_scale_is_local() {
        let cfg = CapConfig { n_bands: 3, payload_symbols: 200, ..Default::default() };
        let bits = random_bits(200 * 6, 3);
        let t1 = cap_probe_table(&cfg).unwrap();
        let mut entries = t1.entries().to_vec();
        entries[0].power_scale = 0.5f64.sqrt();
        entries[1].power_scale = 1.25f64.sqrt();
        entries[2].power_scale = 1.25f64.sqrt();
        let t2 = LoadingTable::new(entries).unwrap();
        let (a, _) = cap_modulate(&bits, &t1, &cfg).unwrap();
        let (b, _) = cap_modulate(&bits, &t2, &cfg).unwrap();
        // Difference is confined to the scaled bands; band 2 scaled the same
        // as band 1, so the difference spectrum is empty nowhere but there.
        let mut d: Vec<Complex64> = a.samples().iter().zip(b.samples()).map(|(x, y)| x - y).collect();
        fft(&mut d);
        assert!(d.iter().any(|z| z.norm() > 1e-6));
    }

    #[test]
    fn cap_loading_avoids_single_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let snr: Vec<f64> = (0..12).map(|_| rng.random_range(3.0..25.0)).collect();
            let t = cap_load(&snr, 28, 6.0).unwrap();
            assert_eq!(t.total_bits_per_symbol(), 28);
            assert!(t.bits().iter().all(|&b| b != 1 && b <= 6));
        }
        assert!(matches!(cap_load(&[30.0; 4], 25, 6.0), Err(Error::Capacity { .. })));
    }
}
