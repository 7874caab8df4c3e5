use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BitSequence;

/// Hard-decision FEC threshold.
pub const FEC_THRESHOLD: f64 = 3.8e-3;

/// Hamming distance and length of two equally long sequences.
pub fn ber_count(truth: &BitSequence, decided: &BitSequence) -> Result<(u64, u64)> {
    count_bits(truth.bits(), decided.bits())
}

pub fn count_bits(truth: &[u8], decided: &[u8]) -> Result<(u64, u64)> {
    if truth.len() != decided.len() {
        return Err(Error::framing(format!(
            "cannot compare {} decided bits with {} sent bits",
            decided.len(),
            truth.len()
        )));
    }
    let errors = truth.iter().zip(decided).filter(|(a, b)| a != b).count() as u64;
    Ok((errors, truth.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub osnr_db: f64,
    pub errors: u64,
    pub bits: u64,
    /// Absent for invalid points.
    pub ber: Option<f64>,
    /// False when synchronization or equalization failed.
    pub valid: bool,
}

impl BerPoint {
    pub fn measured(osnr_db: f64, errors: u64, bits: u64) -> Self {
        let ber = if bits > 0 { Some(errors as f64 / bits as f64) } else { None };
        Self { osnr_db, errors, bits, ber, valid: bits > 0 }
    }

    pub fn invalid(osnr_db: f64) -> Self {
        Self { osnr_db, errors: 0, bits: 0, ber: None, valid: false }
    }

    /// BER with zero-error points placed at half an error.
    fn ber_for_log(&self) -> Option<f64> {
        let b = self.ber?;
        Some(if self.errors == 0 { 0.5 / self.bits as f64 } else { b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveStatus {
    /// The threshold is crossed inside the measured range.
    Ok,
    /// Every valid point lies above the threshold.
    NoCrossing,
    /// Every valid point already lies at or below the threshold.
    Floor,
}

impl CurveStatus {
    pub fn name(self) -> &'static str {
        match self {
            CurveStatus::Ok => "ok",
            CurveStatus::NoCrossing => "no-crossing",
            CurveStatus::Floor => "floor",
        }
    }
}

/// OSNR at which the BER falls to `target`, interpolating OSNR linearly
/// against log10(BER) between the first bracketing pair of valid points.
pub fn rosnr_at(points: &[BerPoint], target: f64) -> Result<f64> {
    let valid: Vec<&BerPoint> = points.iter().filter(|p| p.valid && p.ber.is_some()).collect();
    if valid.windows(2).any(|w| !(w[0].osnr_db < w[1].osnr_db)) {
        return Err(Error::Measurement("BER points must be sorted by ascending OSNR".into()));
    }
    if let Some(p) = valid.iter().find(|p| p.ber == Some(target)) {
        return Ok(p.osnr_db);
    }
    let lt = target.log10();
    for w in valid.windows(2) {
        let (a, b) = (w[0].ber_for_log().unwrap(), w[1].ber_for_log().unwrap());
        if w[0].ber.unwrap() > target && w[1].ber.unwrap() <= target {
            let (la, lb) = (a.log10(), b.log10());
            return Ok(w[0].osnr_db + (w[1].osnr_db - w[0].osnr_db) * (lt - la) / (lb - la));
        }
    }
    let above = valid.iter().all(|p| p.ber.unwrap() > target);
    Err(Error::NoCrossing(if valid.is_empty() {
        "no valid BER points".into()
    } else if above {
        format!("BER never falls to {target:e}")
    } else {
        format!("BER is below {target:e} across the whole range")
    }))
}

/// Classifies a curve against `target`.
pub fn curve_status(points: &[BerPoint], target: f64) -> (Option<f64>, CurveStatus) {
    match rosnr_at(points, target) {
        Ok(r) => (Some(r), CurveStatus::Ok),
        Err(_) => {
            let any_below = points.iter().any(|p| p.valid && p.ber.is_some_and(|b| b <= target));
            (None, if any_below { CurveStatus::Floor } else { CurveStatus::NoCrossing })
        }
    }
}
