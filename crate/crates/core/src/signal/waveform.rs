use num_complex::Complex64;

use crate::error::{Error, Result};

/// What a [`Waveform`]'s samples represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Real electrical signal; imaginary parts are exactly zero.
    ElectricalReal,
    /// Complex envelope of the optical field, referenced to the laser.
    OpticalEnvelope,
}

/// A uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<Complex64>,
    sample_rate: f64,
    domain: Domain,
}

impl Waveform {
    pub fn real(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let samples = samples.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        Self::checked(samples, sample_rate, Domain::ElectricalReal)
    }

    pub fn optical(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        Self::checked(samples, sample_rate, Domain::OpticalEnvelope)
    }

    /// Builds a waveform in `domain`; for the electrical domain the
    /// imaginary parts are discarded.
    pub fn from_complex(samples: Vec<Complex64>, sample_rate: f64, domain: Domain) -> Result<Self> {
        let samples = match domain {
            Domain::ElectricalReal => samples.into_iter().map(|x| Complex64::new(x.re, 0.0)).collect(),
            Domain::OpticalEnvelope => samples,
        };
        Self::checked(samples, sample_rate, domain)
    }

    fn checked(samples: Vec<Complex64>, sample_rate: f64, domain: Domain) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::config(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(Error::config("waveform must contain at least one sample"));
        }
        Ok(Self { samples, sample_rate, domain })
    }

    /// Same rate and domain, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::from_complex(samples, self.sample_rate, self.domain)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn real_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.re).collect()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_real(&self) -> bool {
        self.domain == Domain::ElectricalReal
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean of |x|².
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
            domain: self.domain,
        }
    }

    /// Circularly delays the waveform by `delay` samples.
    pub fn rotated(&self, delay: usize) -> Self {
        let mut samples = self.samples.clone();
        let n = samples.len();
        samples.rotate_right(delay % n);
        Self { samples, sample_rate: self.sample_rate, domain: self.domain }
    }
}
