use num_complex::Complex64;
use rayon::prelude::*;

use super::equalizer::{ffe_mma, EqMode, EqualizerState};
use super::sync::{align, synchronize_detailed, SyncInfo};
use super::{normalize_power, one_period, FrameDescriptor};
use crate::cap::{cap_pulse, diff_qam_encode, split_bands, CapConfig, DiffQam};
use crate::dmt::LoadingTable;
use crate::error::{Error, Result};
use crate::signal::spectrum::{centered_kernel_spectrum, convolve_spectrum};
use crate::signal::{BitSequence, Waveform};

/// Largest symbol slip searched when aligning a band to its training.
const MAX_SLIP: i64 = 2;
/// Symbols used for the initial phase search.
const PHASE_SEARCH_LEN: usize = 256;
const PHASE_SEARCH_STEPS: usize = 90;
/// First-order loop gain of the decision-directed phase tracker.
const PHASE_LOOP_GAIN: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct CapRx {
    pub bits: BitSequence,
    pub sync: SyncInfo,
    /// Blind equalizer convergence per band (`true` for unloaded bands).
    pub converged: Vec<bool>,
}

struct BandOut {
    /// Equalized symbols, aligned and de-rotated: index 0 is training symbol 0.
    symbols: Vec<Complex64>,
    converged: bool,
}

fn qpsk_radius() -> f64 {
    0.5
}

/// Matched filter, T/2 decimation, blind MMA and alignment to the training.
fn process_band(x: &[Complex64], band: usize, bits: u32, train: &[Complex64], cfg: &CapConfig) -> Result<BandOut> {
    let sps = cfg.samples_per_symbol()?;
    let n = x.len();
    let spec = centered_kernel_spectrum(&cap_pulse(band, cfg)?, n);
    let z = convolve_spectrum(x, &spec);
    let mut t2: Vec<Complex64> = z.iter().step_by(sps / 2).copied().collect();
    normalize_power(&mut t2);
    let payload_radius = DiffQam::for_bits(bits.max(2))?.mma_radius();
    let nt = cfg.training_symbols;
    let radius = |k: usize| if k < nt { qpsk_radius() } else { payload_radius };
    let mut st = EqualizerState::new(cfg.ffe_taps, cfg.mma_step, EqMode::BlindMma, 1.0)?;
    let out = ffe_mma(&t2, radius, &mut st, cfg.mma_passes)?;
    let y = out.symbols;
    let m = y.len() as i64;
    let known = &train[..nt];
    let (mut best_slip, mut best_corr) = (0i64, Complex64::new(0.0, 0.0));
    for slip in -MAX_SLIP..=MAX_SLIP {
        let c: Complex64 = known
            .iter()
            .enumerate()
            .map(|(k, t)| y[(k as i64 + slip).rem_euclid(m) as usize] * t.conj())
            .sum();
        if c.norm() > best_corr.norm() {
            best_slip = slip;
            best_corr = c;
        }
    }
    // Undo the quarter-turn ambiguity the blind equalizer leaves behind.
    let turns = (-best_corr.arg() / std::f64::consts::FRAC_PI_2).round();
    let rot = Complex64::from_polar(1.0, turns * std::f64::consts::FRAC_PI_2);
    let mut symbols: Vec<Complex64> = (0..m)
        .map(|k| y[(k + best_slip).rem_euclid(m) as usize] * rot)
        .collect();
    if bits >= 2 {
        track_phase(&mut symbols[nt..], &DiffQam::for_bits(bits)?);
    }
    Ok(BandOut { symbols, converged: out.dispersion_tail < out.dispersion_head })
}

/// Decision-directed carrier phase recovery over the payload. The blind
/// equalizer leaves a residual tilt on constellations that are not mirror
/// symmetric (8 points); a grid search over one quarter turn sets the start
/// phase, then a first-order loop tracks it.
fn track_phase(y: &mut [Complex64], c: &DiffQam) {
    let head = &y[..PHASE_SEARCH_LEN.min(y.len())];
    let cost = |th: f64| {
        let r = Complex64::from_polar(1.0, -th);
        head.iter().map(|&z| (z * r - c.nearest(z * r)).norm_sqr()).sum::<f64>()
    };
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut theta = (0..PHASE_SEARCH_STEPS)
        .map(|i| -quarter / 2.0 + quarter * i as f64 / PHASE_SEARCH_STEPS as f64)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap_or(0.0);
    for z in y.iter_mut() {
        let r = *z * Complex64::from_polar(1.0, -theta);
        let d = c.nearest(r);
        theta += PHASE_LOOP_GAIN * (r * d.conj()).arg();
        *z = r;
    }
}

fn process_all(rx: &Waveform, fd: &FrameDescriptor, table: &LoadingTable, cfg: &CapConfig) -> Result<(Vec<Option<BandOut>>, SyncInfo)> {
    cfg.validate()?;
    if table.len() != cfg.n_bands || fd.training_symbols.len() != cfg.n_bands {
        return Err(Error::framing("band count of loading, frame and configuration disagree"));
    }
    let rx = one_period(rx, fd)?;
    let sync = synchronize_detailed(&rx, fd)?;
    let x: Vec<Complex64> = align(&rx, sync.offset).real_samples().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let bands = (0..cfg.n_bands)
        .into_par_iter()
        .map(|b| {
            let e = table.entries()[b];
            if e.bits == 0 {
                return Ok(None);
            }
            process_band(&x, b, e.bits, &fd.training_symbols[b], cfg).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bands, sync))
}

/// Per-band matched filtering, blind MMA equalization and differential
/// decoding. Bits are concatenated band by band, band 0 first.
pub fn cap_receive(rx: &Waveform, table: &LoadingTable, fd: &FrameDescriptor, cfg: &CapConfig) -> Result<CapRx> {
    let (bands, sync) = process_all(rx, fd, table, cfg)?;
    let nt = cfg.training_symbols;
    let s = fd.payload_bits.len() / table.total_bits_per_symbol().max(1);
    let mut bits = Vec::with_capacity(fd.payload_bits.len());
    let mut converged = Vec::with_capacity(cfg.n_bands);
    for (b, band) in bands.iter().enumerate() {
        let Some(band) = band else {
            converged.push(true);
            continue;
        };
        if !band.converged {
            log::warn!("CAP band {b}: multi-modulus equalizer did not converge");
        }
        converged.push(band.converged);
        let k = table.entries()[b].bits;
        let c = DiffQam::for_bits(k)?;
        let decoded = crate::cap::diff_decode_with(&c, &band.symbols[nt..nt + 1 + s]);
        bits.extend_from_slice(&decoded[k as usize..]);
    }
    Ok(CapRx { bits: BitSequence::explicit(bits)?, sync, converged })
}

/// Per-band SNR (dB) from a probe frame whose payload is known.
pub fn estimate_cap_snr(rx: &Waveform, fd: &FrameDescriptor, table: &LoadingTable, cfg: &CapConfig) -> Result<Vec<f64>> {
    if cfg.training_symbols < 8 {
        return Err(Error::Estimation("SNR estimation needs at least 8 training symbols".into()));
    }
    let (bands, _) = process_all(rx, fd, table, cfg)?;
    let blocks = split_bands(fd.payload_bits.bits(), table)?;
    let nt = cfg.training_symbols;
    let mut snr = Vec::with_capacity(cfg.n_bands);
    for (b, band) in bands.iter().enumerate() {
        let Some(band) = band else {
            snr.push(f64::NEG_INFINITY);
            continue;
        };
        let k = table.entries()[b].bits as usize;
        let mut coded = vec![0u8; k];
        coded.extend_from_slice(blocks[b]);
        let mut known = fd.training_symbols[b][..nt].to_vec();
        known.extend(diff_qam_encode(&coded, 1 << k)?);
        // Skip the first tenth while the equalizer settles.
        let skip = known.len() / 10;
        let y = &band.symbols[skip..known.len()];
        let a = &known[skip..];
        let num: Complex64 = y.iter().zip(a).map(|(y, a)| y * a.conj()).sum();
        let den: f64 = a.iter().map(|a| a.norm_sqr()).sum();
        let g = num / den;
        let noise: f64 = y.iter().zip(a).map(|(y, a)| (y - g * a).norm_sqr()).sum::<f64>() / a.len() as f64;
        let sig = g.norm_sqr() * den / a.len() as f64;
        snr.push(10.0 * (sig / noise).log10());
    }
    Ok(snr)
}
