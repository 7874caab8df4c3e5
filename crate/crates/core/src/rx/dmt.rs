use num_complex::Complex64;

use super::sync::{align, synchronize_detailed, SyncInfo};
use super::{one_period, FrameDescriptor};
use crate::dmt::{dmt_map, DmtConfig, LoadingTable};
use crate::error::{Error, Result};
use crate::signal::spectrum::fft;
use crate::signal::{BitSequence, Waveform};

#[derive(Debug, Clone)]
pub struct DmtRx {
    pub bits: BitSequence,
    /// Per active carrier, from the training symbols.
    pub snr_db: Vec<f64>,
    pub sync: SyncInfo,
}

/// Active-carrier values of every received DMT symbol. The FFT window
/// starts half a prefix early so that spill-over from both sides of the
/// channel response stays inside the guard.
fn demodulate(rx: &Waveform, fd: &FrameDescriptor, cfg: &DmtConfig) -> Result<(Vec<Vec<Complex64>>, SyncInfo)> {
    cfg.validate()?;
    let rx = one_period(rx, fd)?;
    let sync = synchronize_detailed(&rx, fd)?;
    let x = align(&rx, sync.offset).real_samples();
    let n = cfg.fft_size;
    let l = cfg.symbol_len();
    if x.len() % l != 0 {
        return Err(Error::framing("capture is not a whole number of DMT symbols"));
    }
    let g = 1.0 / (n as f64).sqrt();
    let total = x.len();
    let symbols = (0..total / l)
        .map(|s| {
            let start = s * l + cfg.cp_len / 2;
            let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(x[(start + i) % total], 0.0)).collect();
            fft(&mut buf);
            cfg.active_range().map(|k| buf[k] * g).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok((symbols, sync))
}

/// Least-squares one-tap channel and residual SNR per carrier from symbols
/// with known transmitted values.
fn channel_and_snr(rx: &[Vec<Complex64>], tx: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<f64>) {
    let m = tx[0].len();
    let t = tx.len();
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    let mut snr = vec![0.0; m];
    for k in 0..m {
        let num: Complex64 = (0..t).map(|i| rx[i][k] * tx[i][k].conj()).sum();
        let den: f64 = (0..t).map(|i| tx[i][k].norm_sqr()).sum();
        if den == 0.0 {
            snr[k] = f64::NEG_INFINITY;
            continue;
        }
        h[k] = num / den;
        let noise: f64 = (0..t).map(|i| (rx[i][k] - h[k] * tx[i][k]).norm_sqr()).sum::<f64>() / (t as f64 - 1.0).max(1.0);
        let sig = h[k].norm_sqr() * den / t as f64;
        snr[k] = if noise > 0.0 { 10.0 * (sig / noise).log10() } else { f64::INFINITY };
    }
    (h, snr)
}

/// Sync, prefix removal, FFT, one-tap equalization from the training
/// average, and demapping per the loading table.
pub fn dmt_receive(rx: &Waveform, table: &LoadingTable, fd: &FrameDescriptor, cfg: &DmtConfig) -> Result<DmtRx> {
    let (symbols, sync) = demodulate(rx, fd, cfg)?;
    let nt = fd.training_symbols.len();
    if nt == 0 || symbols.len() < nt {
        return Err(Error::framing("frame lacks DMT training symbols"));
    }
    let (h, snr_db) = channel_and_snr(&symbols[..nt], &fd.training_symbols);
    let alphabets = crate::dmt::alphabets()?;
    let lo = cfg.active_carriers.0;
    let per = table.total_bits_per_symbol();
    let n_payload = fd.payload_bits.len() / per.max(1);
    let mut bits = Vec::with_capacity(fd.payload_bits.len());
    for y in &symbols[nt..nt + n_payload] {
        for e in table.entries().iter().filter(|e| e.bits > 0) {
            let k = e.index - lo;
            let z = y[k] / (h[k] * e.power_scale);
            let label = alphabets[e.bits as usize].decide(z);
            bits.extend((0..e.bits).rev().map(|s| ((label >> s) & 1) as u8));
        }
    }
    Ok(DmtRx { bits: BitSequence::explicit(bits)?, snr_db, sync })
}

/// Per-carrier SNR (dB) from a probe frame whose payload is known.
pub fn estimate_dmt_snr(rx: &Waveform, fd: &FrameDescriptor, table: &LoadingTable, cfg: &DmtConfig) -> Result<Vec<f64>> {
    if fd.training_symbols.len() < 8 {
        return Err(Error::Estimation(format!(
            "SNR estimation needs at least 8 training symbols, frame has {}",
            fd.training_symbols.len()
        )));
    }
    let (symbols, _) = demodulate(rx, fd, cfg)?;
    let mut known = fd.training_symbols.clone();
    known.extend(dmt_map(&fd.payload_bits, table, cfg)?);
    Ok(channel_and_snr(&symbols[..known.len()], &known).1)
}
