//! Fractionally spaced (T/2) feed-forward equalizers.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqMode {
    TrainingLms,
    BlindMma,
    DecisionDirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerState {
    pub taps: Vec<Complex64>,
    pub step_size: f64,
    pub mode: EqMode,
}

impl EqualizerState {
    /// Centre-spike initialization with `gain` on the middle tap.
    pub fn new(n_taps: usize, step_size: f64, mode: EqMode, gain: f64) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::config("equalizer needs at least one tap"));
        }
        if !(step_size > 0.0) {
            return Err(Error::config("equalizer step size must be positive"));
        }
        let mut taps = vec![Complex64::new(0.0, 0.0); n_taps];
        taps[n_taps / 2] = Complex64::new(gain, 0.0);
        Ok(Self { taps, step_size, mode })
    }

    pub fn center(&self) -> usize {
        self.taps.len() / 2
    }

    /// Output for symbol `k` of a periodic T/2 sequence.
    fn output(&self, x: &[Complex64], k: usize) -> Complex64 {
        let n = x.len();
        let c = self.center();
        let base = 2 * k + n * (c / n + 1) - c;
        self.taps.iter().enumerate().map(|(j, w)| w * x[(base + j) % n]).sum()
    }

    fn update(&mut self, x: &[Complex64], k: usize, err: Complex64) {
        let n = x.len();
        let c = self.center();
        let base = 2 * k + n * (c / n + 1) - c;
        let mu = self.step_size;
        for (j, w) in self.taps.iter_mut().enumerate() {
            *w += mu * err * x[(base + j) % n].conj();
        }
    }
}

/// Outcome of an LMS run.
#[derive(Debug, Clone)]
pub struct LmsOutput {
    /// Equalized symbol estimates for every symbol of the sequence.
    pub symbols: Vec<f64>,
    pub mse_head: f64,
    pub mse_tail: f64,
}

/// Real-valued T/2 LMS FFE.
///
/// `x` holds two samples per symbol (sample `2k` on symbol `k`) of a
/// periodic sequence of `x.len() / 2` symbols. The first `training.len()`
/// symbols are known: the taps adapt on them for `passes` passes, then run
/// decision-directed over the rest using `slicer`.
pub fn ffe_lms(
    x: &[f64],
    training: &[f64],
    st: &mut EqualizerState,
    passes: usize,
    slicer: impl Fn(f64) -> f64,
) -> Result<LmsOutput> {
    let n_sym = x.len() / 2;
    if training.is_empty() || training.len() > n_sym {
        return Err(Error::framing("training longer than the symbol sequence"));
    }
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let nt = training.len();
    let span = (nt / 10).max(1);
    let (mut head, mut tail) = (0.0, 0.0);
    st.mode = EqMode::TrainingLms;
    for pass in 0..passes.max(1) {
        for (k, &d) in training.iter().enumerate() {
            let y = st.output(&xc, k).re;
            let e = d - y;
            if pass == 0 && k < span {
                head += e * e;
            }
            if pass + 1 == passes.max(1) && k >= nt - span {
                tail += e * e;
            }
            st.update(&xc, k, Complex64::new(e, 0.0));
        }
    }
    head /= span as f64;
    tail /= span as f64;
    // A rise counts only beyond four standard errors of an MSE estimate over
    // `span` Gaussian-error symbols.
    let limit = head * (1.0 + 4.0 * (2.0 / span as f64).sqrt());
    if !tail.is_finite() || tail > limit {
        return Err(Error::Divergence(format!(
            "training MSE rose from {head:.3e} to {tail:.3e}; reduce the step size below {}",
            st.step_size
        )));
    }
    st.mode = EqMode::DecisionDirected;
    let mut symbols = Vec::with_capacity(n_sym);
    for k in 0..n_sym {
        let y = st.output(&xc, k).re;
        if k >= nt {
            let e = slicer(y) - y;
            st.update(&xc, k, Complex64::new(e, 0.0));
        }
        symbols.push(y);
    }
    if symbols.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("decision-directed equalizer output is not finite".into()));
    }
    Ok(LmsOutput { symbols, mse_head: head, mse_tail: tail })
}

/// Outcome of a blind MMA run.
#[derive(Debug, Clone)]
pub struct MmaOutput {
    pub symbols: Vec<Complex64>,
    /// Modulus-error variance over the last tenth of the sequence, with the
    /// initial taps (`head`) and after the final pass (`tail`).
    pub dispersion_head: f64,
    pub dispersion_tail: f64,
}

impl MmaOutput {
    pub fn converged(&self) -> bool {
        self.dispersion_tail < self.dispersion_head
    }
}

/// Complex T/2 multi-modulus equalizer. `radius(k)` is the per-axis
/// modulus expected at symbol `k`.
///
/// Runs `passes` adaptation passes over the periodic sequence and reports
/// the outputs of the last one.
pub fn ffe_mma(x: &[Complex64], radius: impl Fn(usize) -> f64, st: &mut EqualizerState, passes: usize) -> Result<MmaOutput> {
    let n_sym = x.len() / 2;
    if n_sym == 0 {
        return Err(Error::framing("no symbols to equalize"));
    }
    st.mode = EqMode::BlindMma;
    let span = (n_sym / 10).max(1);
    let dispersion = |y: Complex64, r: f64| (y.re * y.re - r).powi(2) + (y.im * y.im - r).powi(2);
    let dispersion_head = (n_sym - span..n_sym).map(|k| dispersion(st.output(x, k), radius(k))).sum::<f64>() / span as f64;
    let mut symbols = vec![Complex64::new(0.0, 0.0); n_sym];
    let passes = passes.max(1);
    for _ in 0..passes {
        for k in 0..n_sym {
            let y = st.output(x, k);
            let r = radius(k);
            let e = Complex64::new(y.re * (y.re * y.re - r), y.im * (y.im * y.im - r));
            st.update(x, k, -e);
            symbols[k] = y;
        }
        if symbols.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("multi-modulus equalizer output is not finite".into()));
        }
    }
    let dispersion_tail = (n_sym - span..n_sym).map(|k| dispersion(symbols[k], radius(k))).sum::<f64>() / span as f64;
    Ok(MmaOutput { symbols, dispersion_head, dispersion_tail })
}
