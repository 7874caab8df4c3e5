use super::equalizer::{ffe_lms, EqMode, EqualizerState};
use super::sync::{align, synchronize_detailed, SyncInfo};
use super::{normalize_power, one_period, FrameDescriptor};
use crate::error::{Error, Result};
use crate::pam4::{pam4_decode, pam4_training, Pam4Config};
use crate::signal::{resample, BitSequence, Waveform};

#[derive(Debug, Clone)]
pub struct Pam4Rx {
    pub bits: BitSequence,
    pub sync: SyncInfo,
    /// Equalized payload symbols.
    pub symbols: Vec<f64>,
    pub taps: Vec<f64>,
}

fn slicer(y: f64) -> f64 {
    let u = 1.0 / 5f64.sqrt();
    let l = ((y / u + 3.0) / 2.0).round().clamp(0.0, 3.0);
    (2.0 * l - 3.0) * u
}

/// Sync, T/2 resampling, LMS FFE, slicing and Gray demapping.
pub fn pam4_receive(rx: &Waveform, fd: &FrameDescriptor, cfg: &Pam4Config) -> Result<Pam4Rx> {
    cfg.validate()?;
    let rx = one_period(rx, fd)?;
    let sync = synchronize_detailed(&rx, fd)?;
    let aligned = align(&rx, sync.offset);
    let sps = cfg.samples_per_symbol()?;
    let t2 = resample(&aligned, 2, sps)?;
    let mut x = t2.real_samples();
    normalize_power(&mut x);
    let training = pam4_training(cfg.training_len)?;
    let gain = if sync.inverted { -1.0 } else { 1.0 };
    let mut st = EqualizerState::new(cfg.ffe_taps, cfg.step_size, EqMode::TrainingLms, gain)?;
    let out = ffe_lms(&x, &training, &mut st, cfg.training_passes, slicer)?;
    let n_payload = fd.payload_bits.len() / 2;
    let start = cfg.training_len;
    if out.symbols.len() < start + n_payload {
        return Err(Error::framing("equalized sequence shorter than the payload"));
    }
    let symbols = out.symbols[start..start + n_payload].to_vec();
    let bits = BitSequence::explicit(pam4_decode(&symbols))?;
    Ok(Pam4Rx { bits, sync, symbols, taps: st.taps.iter().map(|w| w.re).collect() })
}
