//! Smoothed, robustly normalized topological change signal and its adaptive threshold.

use crate::error::{Error, Result};

/// Median of a nonempty slice; even lengths average the two middle values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut work = values.to_vec();
    let n = work.len();
    let mid = n / 2;
    let (_, upper, _) = work.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = work[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// Raw median absolute deviation (no consistency factor).
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// How many trailing observations the robust statistics use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Every observation so far.
    Unbounded,
    /// The most recent `n` observations (`n >= 1`).
    Last(usize),
}

impl Window {
    pub fn slice<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        match *self {
            Window::Unbounded => values,
            Window::Last(n) => &values[values.len().saturating_sub(n)..],
        }
    }
}

/// `epsilon = median(z) + k * MAD(z)` over the windowed history.
pub fn adaptive_threshold(z_history: &[f64], k_mad: f64, window: Window) -> Result<f64> {
    if z_history.is_empty() {
        return Err(Error::state("threshold needs at least one z value"));
    }
    if !(k_mad > 0.0) {
        return Err(Error::arg(format!("MAD multiplier must be > 0, got {k_mad}")));
    }
    let w = window.slice(z_history);
    Ok(median(w) + k_mad * mad(w))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalConfig {
    /// EMA factor in `[0, 1)`; weight on the previous smoothed value.
    pub lambda: f64,
    /// Positive stabilizer added to the MAD.
    pub tau: f64,
    pub window: Window,
    pub k_mad: f64,
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::arg(format!("lambda must be in [0, 1), got {}", self.lambda)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::arg(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.k_mad > 0.0) {
            return Err(Error::arg(format!("k_mad must be > 0, got {}", self.k_mad)));
        }
        if self.window == Window::Last(0) {
            return Err(Error::arg("window must hold at least one value"));
        }
        Ok(())
    }
}

/// One observation's worth of signal output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub raw: f64,
    pub smoothed: f64,
    pub z: f64,
    pub threshold: f64,
}

/// Running δ series with EMA smoothing and median/MAD normalization.
#[derive(Debug, Clone)]
pub struct TopoSignalState {
    config: SignalConfig,
    raw: Vec<f64>,
    smoothed: Vec<f64>,
    z_history: Vec<f64>,
}

impl TopoSignalState {
    pub fn new(config: SignalConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, raw: Vec::new(), smoothed: Vec::new(), z_history: Vec::new() })
    }

    pub fn config(&self) -> &SignalConfig {
        &self.config
    }

    /// Append `delta` and return the normalized `z_t`.
    pub fn push_distance(&mut self, delta: f64) -> Result<f64> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::arg(format!("distance must be finite and >= 0, got {delta}")));
        }
        let smoothed = match self.smoothed.last() {
            None => delta,
            // (1 - lambda) * delta + lambda * prev, written so a repeated value is a fixed point
            Some(&prev) => prev + (1.0 - self.config.lambda) * (delta - prev),
        };
        self.raw.push(delta);
        self.smoothed.push(smoothed);
        let w = self.config.window.slice(&self.smoothed);
        let z = (smoothed - median(w)) / (mad(w) + self.config.tau);
        self.z_history.push(z);
        Ok(z)
    }

    /// Threshold over the current z history.
    pub fn threshold(&self) -> Result<f64> {
        adaptive_threshold(&self.z_history, self.config.k_mad, self.config.window)
    }

    /// `push_distance` followed by `threshold`.
    pub fn observe(&mut self, delta: f64) -> Result<SignalSample> {
        let z = self.push_distance(delta)?;
        Ok(SignalSample { raw: delta, smoothed: *self.smoothed.last().unwrap(), z, threshold: self.threshold()? })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn smoothed(&self) -> &[f64] {
        &self.smoothed
    }

    pub fn z_history(&self) -> &[f64] {
        &self.z_history
    }
}
