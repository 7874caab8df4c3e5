//! PAM-4 transmitter: Gray mapping, pulse shaping onto the DAC grid and
//! framing behind a known training prefix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rx::{FormatTag, FrameDescriptor};
use crate::signal::{map_symbols, prbs_generate, rrc_taps, BitSequence, Constellation, Waveform};

/// Pulse shape applied on the DAC grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapingKind {
    Rrc,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pam4Config {
    pub symbol_rate: f64,
    pub dac_rate: f64,
    pub shaping: ShapingKind,
    pub rolloff: f64,
    /// RRC length in symbols.
    pub rrc_span: usize,
    pub training_len: usize,
    pub payload_symbols: usize,
    pub ffe_taps: usize,
    pub step_size: f64,
    /// Passes of the LMS over the training prefix before decision-directed mode.
    pub training_passes: usize,
    /// RMS drive swing as a fraction of V_pi.
    pub drive_rms_vpi: f64,
    /// Payloads shorter than this trigger a warning.
    pub min_payload_bits: usize,
}

impl Default for Pam4Config {
    fn default() -> Self {
        Self {
            symbol_rate: 28e9,
            dac_rate: 84e9,
            shaping: ShapingKind::Rrc,
            rolloff: 0.5,
            rrc_span: 16,
            training_len: 4096,
            payload_symbols: 65536,
            ffe_taps: 11,
            step_size: 1e-3,
            training_passes: 8,
            drive_rms_vpi: 0.3,
            min_payload_bits: 10_000,
        }
    }
}

impl Pam4Config {
    pub fn samples_per_symbol(&self) -> Result<usize> {
        let r = self.dac_rate / self.symbol_rate;
        if (r - r.round()).abs() > 1e-9 || r.round() < 1.0 {
            return Err(Error::config(format!(
                "DAC rate {} is not an integer multiple of the symbol rate {}",
                self.dac_rate, self.symbol_rate
            )));
        }
        Ok(r.round() as usize)
    }

    pub fn gross_bit_rate(&self) -> f64 {
        2.0 * self.symbol_rate
    }

    pub fn validate(&self) -> Result<()> {
        self.samples_per_symbol()?;
        if self.ffe_taps == 0 {
            return Err(Error::config("FFE needs at least one tap"));
        }
        if self.training_len < 4 * self.ffe_taps {
            return Err(Error::config(format!(
                "training length {} below 4 x {} FFE taps",
                self.training_len, self.ffe_taps
            )));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::config("LMS step size must be positive"));
        }
        if self.payload_symbols == 0 {
            return Err(Error::config("PAM-4 frame needs payload symbols"));
        }
        if self.shaping == ShapingKind::Rrc {
            rrc_taps(self.rolloff, self.rrc_span, self.samples_per_symbol()?.max(2))?;
        }
        Ok(())
    }
}

/// Gray PAM-4 levels in units of `1/sqrt(5)`.
pub fn pam4_encode(bits: &BitSequence) -> Result<Vec<f64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::framing(format!("PAM-4 needs an even bit count, got {}", bits.len())));
    }
    let c = Constellation::pam(4)?;
    Ok(map_symbols(bits, &c)?.into_iter().map(|z| z.re).collect())
}

/// Slices to the nearest level and returns the Gray bits.
pub fn pam4_decode(symbols: &[f64]) -> Vec<u8> {
    let u = 1.0 / 5f64.sqrt();
    let mut out = Vec::with_capacity(symbols.len() * 2);
    for &y in symbols {
        let bits = if y < -2.0 * u {
            [0, 0]
        } else if y < 0.0 {
            [0, 1]
        } else if y < 2.0 * u {
            [1, 1]
        } else {
            [1, 0]
        };
        out.extend_from_slice(&bits);
    }
    out
}

/// Fixed training sequence known to the receiver.
pub fn pam4_training(len: usize) -> Result<Vec<f64>> {
    let bits = prbs_generate(15, 0x2b5d, 2 * len.max(1))?;
    let mut sym = pam4_encode(&bits)?;
    sym.truncate(len);
    Ok(sym)
}

/// Places `symbols` on a periodic grid of `sps` samples per symbol.
pub(crate) fn shape_periodic(symbols: &[f64], sps: usize, taps: Option<&[f64]>) -> Vec<f64> {
    let n = symbols.len() * sps;
    let mut out = vec![0.0; n];
    match taps {
        None => {
            for (k, &a) in symbols.iter().enumerate() {
                out[k * sps..(k + 1) * sps].iter_mut().for_each(|x| *x = a);
            }
        }
        Some(h) => {
            let mid = h.len() / 2;
            for (k, &a) in symbols.iter().enumerate() {
                let base = k * sps + n * (mid / n + 1) - mid;
                for (j, &t) in h.iter().enumerate() {
                    out[(base + j) % n] += a * t;
                }
            }
        }
    }
    out
}

/// Builds a periodic PAM-4 frame: training symbols then payload symbols.
pub fn pam4_build_frame(payload: &BitSequence, cfg: &Pam4Config) -> Result<(Waveform, FrameDescriptor)> {
    cfg.validate()?;
    if payload.len() < cfg.min_payload_bits {
        log::warn!(
            "PAM-4 payload of {} bits is below the {} bits needed for a reliable BER",
            payload.len(),
            cfg.min_payload_bits
        );
    }
    let sps = cfg.samples_per_symbol()?;
    let training = pam4_training(cfg.training_len)?;
    let data = pam4_encode(payload)?;
    let mut symbols = training.clone();
    symbols.extend_from_slice(&data);
    let taps = match cfg.shaping {
        ShapingKind::Rrc => Some(rrc_taps(cfg.rolloff, cfg.rrc_span, sps)?),
        ShapingKind::None => None,
    };
    let samples = shape_periodic(&symbols, sps, taps.as_deref());
    let n = samples.len();
    let train_end = cfg.training_len * sps;
    let fd = FrameDescriptor {
        format: FormatTag::Pam4,
        training_symbols: vec![training.iter().map(|&a| Complex64::new(a, 0.0)).collect()],
        payload_bits: payload.clone(),
        boundaries: vec![0, train_end, n],
        reference: samples[..train_end].to_vec(),
        sample_rate: cfg.dac_rate,
    };
    fd.validate()?;
    Ok((Waveform::real(samples, cfg.dac_rate)?, fd))
}
