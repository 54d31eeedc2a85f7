use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Uniformly sampled `(time, value)` pairs of an observable.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

const GRID_TOL: f64 = 1e-12;

impl TimeSeries {
    /// `values[k]` sampled at `t0 + k·delta`.
    pub fn uniform(t0: f64, delta: f64, values: Vec<f64>) -> Self {
        let times = (0..values.len()).map(|k| t0 + k as f64 * delta).collect();
        TimeSeries { times, values }
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = TimeSeries { times, values };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample spacing, or `None` for fewer than two points.
    pub fn spacing(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::invalid(format!("{} times but {} values", self.times.len(), self.values.len())));
        }
        if self.values.iter().chain(&self.times).any(|v| !v.is_finite()) {
            return Err(Error::invalid("series contains non-finite entries"));
        }
        if let Some(dt) = self.spacing() {
            if !(dt > 0.0) {
                return Err(Error::invalid("times must be strictly increasing"));
            }
            let t0 = self.times[0];
            for (k, &t) in self.times.iter().enumerate() {
                let want = t0 + k as f64 * dt;
                if (t - want).abs() > GRID_TOL * want.abs().max(1.0) {
                    return Err(Error::invalid(format!("sample {k} at t={t} breaks uniform spacing {dt}")));
                }
            }
        }
        Ok(())
    }

    /// Points `range`, keeping their original times.
    pub fn slice(&self, range: core::ops::Range<usize>) -> TimeSeries {
        TimeSeries { times: self.times[range.clone()].to_vec(), values: self.values[range].to_vec() }
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
