//! DMT transmitter: loaded QAM on the active carriers of a real-valued
//! 512-point IFFT, cyclic prefix and clipping.

mod loading;

pub(crate) use loading::table_from_bits;
pub use loading::{chow_load, chow_load_capped, loading_margin_db, LoadingEntry, LoadingTable, MAX_BITS};

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rx::{FormatTag, FrameDescriptor};
use crate::signal::spectrum::ifft;
use crate::signal::{map_symbols, prbs_generate, BitSequence, Constellation, Domain, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmtConfig {
    pub fft_size: usize,
    pub cp_len: usize,
    pub dac_rate: f64,
    /// Inclusive carrier index range.
    pub active_carriers: (usize, usize),
    pub clip_ratio_db: f64,
    pub target_bits_per_symbol: usize,
    pub gap_db: f64,
    pub training_symbols: usize,
    pub payload_symbols: usize,
    /// QPSK symbols in the SNR probe frame.
    pub probe_symbols: usize,
    /// RMS drive swing as a fraction of V_pi.
    pub drive_rms_vpi: f64,
    /// Fixed loading table (CSV) used instead of probing.
    pub loading_file: Option<PathBuf>,
}

impl Default for DmtConfig {
    fn default() -> Self {
        Self {
            fft_size: 512,
            cp_len: 8,
            dac_rate: 84e9,
            active_carriers: (1, 170),
            clip_ratio_db: 13.0,
            target_bits_per_symbol: 347,
            gap_db: 6.0,
            training_symbols: 8,
            payload_symbols: 400,
            probe_symbols: 512,
            drive_rms_vpi: 0.1,
            loading_file: None,
        }
    }
}

impl DmtConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.active_carriers;
        if self.fft_size < 4 || !self.fft_size.is_power_of_two() {
            return Err(Error::config(format!("FFT size {} must be a power of two", self.fft_size)));
        }
        if self.cp_len >= self.fft_size {
            return Err(Error::config("cyclic prefix must be shorter than the FFT"));
        }
        if lo == 0 || hi >= self.fft_size / 2 || lo > hi {
            return Err(Error::config(format!(
                "active carriers {lo}..={hi} must lie within 1..={}",
                self.fft_size / 2 - 1
            )));
        }
        if self.training_symbols == 0 {
            return Err(Error::config("DMT frame needs at least one training symbol"));
        }
        if self.payload_symbols == 0 || self.probe_symbols == 0 {
            return Err(Error::config("DMT frame needs payload symbols"));
        }
        if !(self.dac_rate > 0.0) {
            return Err(Error::config("DAC rate must be positive"));
        }
        Ok(())
    }

    pub fn n_active(&self) -> usize {
        self.active_carriers.1 - self.active_carriers.0 + 1
    }

    pub fn active_range(&self) -> std::ops::RangeInclusive<usize> {
        self.active_carriers.0..=self.active_carriers.1
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn bit_rate(&self, bits_per_symbol: usize) -> f64 {
        bits_per_symbol as f64 * self.dac_rate / self.symbol_len() as f64
    }

    /// Fewest bits per DMT symbol that reach `rate`.
    pub fn bits_for_rate(&self, rate: f64) -> usize {
        (rate * self.symbol_len() as f64 / self.dac_rate - 1e-9).ceil() as usize
    }

    pub fn carrier_frequency(&self, k: usize) -> f64 {
        k as f64 * self.dac_rate / self.fft_size as f64
    }
}

/// Known QPSK symbols on every active carrier, one vector per training symbol.
pub fn dmt_training(cfg: &DmtConfig) -> Result<Vec<Vec<Complex64>>> {
    let per = cfg.n_active();
    let bits = prbs_generate(23, 0x5a_c3e1, 2 * per * cfg.training_symbols)?;
    let qpsk = map_symbols(&bits, &Constellation::qam(4)?)?;
    Ok(qpsk.chunks(per).map(<[Complex64]>::to_vec).collect())
}

/// Hermitian-symmetric IFFT of one symbol with unitary scaling, before the
/// imaginary part is dropped.
pub fn symbol_time(active: &[Complex64], first: usize, n: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in active.iter().enumerate() {
        let k = first + j;
        x[k] = v;
        x[n - k] = v.conj();
    }
    ifft(&mut x);
    let g = (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= g);
    x
}

fn append_symbol(out: &mut Vec<f64>, active: &[Complex64], cfg: &DmtConfig) {
    let t = symbol_time(active, cfg.active_carriers.0, cfg.fft_size);
    out.extend(t[cfg.fft_size - cfg.cp_len..].iter().map(|v| v.re));
    out.extend(t.iter().map(|v| v.re));
}

/// Checks that `table` addresses only active carriers.
pub fn check_table(table: &LoadingTable, cfg: &DmtConfig) -> Result<()> {
    let range = cfg.active_range();
    if let Some(e) = table.entries().iter().find(|e| !range.contains(&e.index)) {
        return Err(Error::config(format!("loading table addresses inactive carrier {}", e.index)));
    }
    Ok(())
}

/// Maps a payload onto loaded carriers. Returns one vector of active-carrier
/// values per DMT symbol.
pub fn dmt_map(bits: &BitSequence, table: &LoadingTable, cfg: &DmtConfig) -> Result<Vec<Vec<Complex64>>> {
    check_table(table, cfg)?;
    let per = table.total_bits_per_symbol();
    if per == 0 || bits.len() % per != 0 {
        return Err(Error::framing(format!(
            "{} bits do not fill whole DMT symbols of {per} bits",
            bits.len()
        )));
    }
    let alphabets = alphabets()?;
    let first = cfg.active_carriers.0;
    let mut out = Vec::with_capacity(bits.len() / per);
    for chunk in bits.bits().chunks(per) {
        let mut active = vec![Complex64::new(0.0, 0.0); cfg.n_active()];
        let mut pos = 0;
        for e in table.entries().iter().filter(|e| e.bits > 0) {
            let b = e.bits as usize;
            let label = chunk[pos..pos + b].iter().fold(0u32, |acc, &x| (acc << 1) | x as u32);
            pos += b;
            active[e.index - first] = alphabets[b].point(label) * e.power_scale;
        }
        out.push(active);
    }
    Ok(out)
}

/// QAM alphabets indexed by bits per symbol; index 0 is unused.
pub(crate) fn alphabets() -> Result<Vec<Constellation>> {
    let mut v = vec![Constellation::qam(2)?];
    for b in 1..=MAX_BITS {
        v.push(Constellation::for_bits(b)?);
    }
    Ok(v)
}

/// Builds a DMT frame: training symbols, then the loaded payload symbols,
/// each with its cyclic prefix, clipped at `cfg.clip_ratio_db`.
pub fn dmt_modulate(bits: &BitSequence, table: &LoadingTable, cfg: &DmtConfig) -> Result<(Waveform, FrameDescriptor)> {
    cfg.validate()?;
    let payload = dmt_map(bits, table, cfg)?;
    let training = dmt_training(cfg)?;
    let sym_len = cfg.symbol_len();
    let mut samples = Vec::with_capacity((training.len() + payload.len()) * sym_len);
    for s in training.iter().chain(&payload) {
        append_symbol(&mut samples, s, cfg);
    }
    let w = clip(&Waveform::real(samples, cfg.dac_rate)?, cfg.clip_ratio_db)?;
    let train_end = training.len() * sym_len;
    let fd = FrameDescriptor {
        format: FormatTag::Dmt,
        training_symbols: training,
        payload_bits: bits.clone(),
        boundaries: vec![0, train_end, w.len()],
        reference: w.real_samples()[..train_end].to_vec(),
        sample_rate: cfg.dac_rate,
    };
    fd.validate()?;
    Ok((w, fd))
}

/// Uniform QPSK on every active carrier, used to measure the per-carrier SNR.
pub fn dmt_probe_frame(cfg: &DmtConfig) -> Result<(Waveform, FrameDescriptor)> {
    let table = LoadingTable::uniform(cfg.active_carriers.0, cfg.n_active(), 2)?;
    let bits = prbs_generate(31, 0x1f2e_3d4c, cfg.probe_symbols * table.total_bits_per_symbol())?;
    dmt_modulate(&bits, &table, cfg)
}

fn clipped_papr(x: &[f64], level: f64) -> f64 {
    let p = x.iter().map(|v| v.clamp(-level, level).powi(2)).sum::<f64>() / x.len() as f64;
    level / p.sqrt()
}

/// Limits the peak-to-RMS ratio of a real waveform to `clip_ratio_db`.
///
/// The threshold is chosen so that the clipped output itself meets the
/// ratio. At or below 0 dB the waveform is hard-limited to its input RMS.
pub fn clip(w: &Waveform, clip_ratio_db: f64) -> Result<Waveform> {
    if w.domain() != Domain::ElectricalReal {
        return Err(Error::config("clipping needs an electrical-real waveform"));
    }
    let x = w.real_samples();
    let rms = w.rms();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if rms == 0.0 {
        return Ok(w.clone());
    }
    let ratio = 10f64.powf(clip_ratio_db / 20.0);
    if ratio <= 1.0 {
        let out = x.iter().map(|&v| if v == 0.0 { 0.0 } else { rms.copysign(v) }).collect();
        return Waveform::real(out, w.sample_rate());
    }
    if peak / rms <= ratio {
        return Ok(w.clone());
    }
    // The clipped peak-to-RMS ratio grows monotonically with the level.
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if clipped_papr(&x, mid) <= ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let out = x.iter().map(|v| v.clamp(-lo, lo)).collect();
    Waveform::real(out, w.sample_rate())
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &[f64]) -> f64 {
    let p = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v * v));
    10.0 * (peak / p).log10()
}
