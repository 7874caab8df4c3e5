//! Deterministic simulator for 56 Gbit/s intensity-modulated, directly
//! detected optical links over standard single-mode fiber.
//!
//! Three modulation stacks share one physical channel model:
//!
//! * [`pam4`]: 28 GBd PAM-4 with a T/2-spaced LMS feedforward equalizer,
//! * [`dmt`]: 512-point DMT with SNR-driven bit and power loading,
//! * [`cap`]: multi-band CAP with differential QAM and blind multi-modulus
//!   equalization per band.
//!
//! [`channel`] models the transmitter, optical filtering (including
//! vestigial-sideband detuning), fiber dispersion, ASE noise loading and the
//! receiver front end; [`rx`] holds the receiver DSP and [`harness`] runs
//! BER-vs-OSNR sweeps and required-OSNR comparisons.

pub mod cap;
pub mod channel;
pub mod dmt;
pub mod error;
pub mod harness;
pub mod pam4;
pub mod rng;
pub mod rx;
pub mod signal;

pub use error::{Error, Result};
