//! Receiver DSP: synchronization, equalization and demapping for PAM-4,
//! DMT and multi-band CAP.

mod cap;
mod dmt;
mod equalizer;
mod frame;
mod pam4;
mod sync;

pub use cap::{cap_receive, estimate_cap_snr, CapRx};
pub use dmt::{dmt_receive, estimate_dmt_snr, DmtRx};
pub use equalizer::{ffe_lms, ffe_mma, EqMode, EqualizerState, LmsOutput, MmaOutput};
pub use frame::{FormatTag, FrameDescriptor};
pub use pam4::{pam4_receive, Pam4Rx};
pub use sync::{align, synchronize, synchronize_detailed, SyncInfo, SYNC_THRESHOLD};

use crate::signal::Waveform;

/// Scales a sequence to unit mean power.
pub(crate) fn normalize_power<T>(x: &mut [T])
where
    T: Copy + std::ops::MulAssign<f64> + Into<num_complex::Complex64>,
{
    let p = x.iter().map(|&v| v.into().norm_sqr()).sum::<f64>() / x.len().max(1) as f64;
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// Capture and frame must share one period.
pub(crate) fn one_period(rx: &Waveform, fd: &FrameDescriptor) -> crate::Result<Waveform> {
    if rx.len() == fd.frame_len() {
        return Ok(rx.clone());
    }
    if rx.len() < fd.frame_len() {
        return Err(crate::Error::framing("capture shorter than one frame"));
    }
    rx.with_samples(rx.samples()[..fd.frame_len()].to_vec())
}
