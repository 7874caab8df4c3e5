//! Shared signal primitives: waveforms, bit sources, constellations, pulse
//! shaping and spectral helpers.

mod bits;
mod constellation;
mod filter;
pub mod spectrum;
mod waveform;

pub use bits::{prbs_generate, BitOrigin, BitSequence};
pub use constellation::{demap_symbols, map_symbols, Constellation, Geometry};
pub use filter::{
    bessel4_response, circular_filter, fir_filter, resample, rrc_taps, rrc_value,
};
pub use waveform::{Domain, Waveform};
