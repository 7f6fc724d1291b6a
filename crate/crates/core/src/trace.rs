use crate::error::{Error, Result};

/// Uniformly sampled sensor amplitudes.
///
/// Sample `n` covers the bin `[t0 + n*dt, t0 + (n+1)*dt)`; its nominal time is the
/// bin center `t0 + (n + 1/2)*dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    sample_interval: f64,
    t0: f64,
    samples: Vec<f64>,
}

impl SensorTrace {
    pub fn new(sample_interval: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(Error::config(format!(
                "sample_interval must be finite and > 0, got {sample_interval}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::config(format!("t0 must be finite, got {t0}")));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::config(format!("sample {i} is not finite")));
        }
        Ok(Self {
            sample_interval,
            t0,
            samples,
        })
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Start time of bin `n`.
    pub fn bin_start(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.sample_interval
    }

    /// Center time of bin `n`.
    pub fn bin_center(&self, n: usize) -> f64 {
        self.t0 + (n as f64 + 0.5) * self.sample_interval
    }

    pub fn max(&self) -> Option<f64> {
        self.samples.iter().copied().reduce(f64::max)
    }

    /// Same clock, new samples. Callers guarantee equal length and finiteness.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            sample_interval: self.sample_interval,
            t0: self.t0,
            samples,
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
