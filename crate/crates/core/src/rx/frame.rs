use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::BitSequence;

/// Modulation format of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatTag {
    Pam4,
    Dmt,
    Cap,
}

impl FormatTag {
    pub fn name(self) -> &'static str {
        match self {
            FormatTag::Pam4 => "pam4",
            FormatTag::Dmt => "dmt",
            FormatTag::Cap => "cap",
        }
    }
}

impl std::str::FromStr for FormatTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pam4" | "pam-4" => Ok(FormatTag::Pam4),
            "dmt" => Ok(FormatTag::Dmt),
            "cap" => Ok(FormatTag::Cap),
            other => Err(Error::config(format!("unknown format '{other}'"))),
        }
    }
}

impl std::fmt::Display for FormatTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Binds what the transmitter sent to what the receiver must recover.
#[derive(Debug, Clone)]
pub struct FrameDescriptor {
    pub format: FormatTag,
    /// Known training symbols, one sequence per stream: a single sequence for
    /// PAM-4, one per training symbol (active carriers in order) for DMT and
    /// one per band for CAP (including the differential reference symbol).
    pub training_symbols: Vec<Vec<Complex64>>,
    pub payload_bits: BitSequence,
    /// Sample indices `[training_start, payload_start, frame_end]`.
    pub boundaries: Vec<usize>,
    /// Transmitted samples of the training section, used for synchronization.
    pub reference: Vec<f64>,
    pub sample_rate: f64,
}

impl FrameDescriptor {
    pub fn frame_len(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    pub fn payload_start(&self) -> usize {
        self.boundaries.get(1).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.len() < 2 {
            return Err(Error::framing("frame needs at least two boundaries"));
        }
        if self.boundaries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::framing("frame boundaries are not monotonic"));
        }
        if self.reference.len() > self.frame_len() {
            return Err(Error::framing("synchronization reference longer than the frame"));
        }
        Ok(())
    }
}
