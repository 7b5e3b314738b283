//! Result containers for protocol runs: time series and frequency scans.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A sampled time series: observable values on a nondecreasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    times_s: Vec<f64>,
    values: Vec<f64>,
}

impl TimeTrace {
    pub fn new(times_s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_s.len() != values.len() {
            return Err(Error::invalid(format!(
                "time grid has {} entries but values have {}",
                times_s.len(),
                values.len()
            )));
        }
        if times_s.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("time grid must be nondecreasing"));
        }
        if times_s.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("trace entries must be finite"));
        }
        Ok(TimeTrace { times_s, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same values on a rescaled time axis (e.g. the 1/√3 interaction-scaling
    /// axis of homonuclear-decoupled runs).
    pub fn time_scaled(&self, factor: f64) -> TimeTrace {
        TimeTrace {
            times_s: self.times_s.iter().map(|t| t * factor).collect(),
            values: self.values.clone(),
        }
    }

    /// First time the envelope |value| falls to 1/e of its initial magnitude
    /// (linear interpolation between samples); `None` if it never does.
    pub fn one_over_e_time_s(&self) -> Option<f64> {
        let v0 = self.values.first()?.abs();
        if v0 == 0.0 {
            return None;
        }
        let target = v0 / std::f64::consts::E;
        for i in 1..self.len() {
            let (a, b) = (self.values[i - 1].abs(), self.values[i].abs());
            if b <= target {
                if (a - b).abs() < f64::EPSILON {
                    return Some(self.times_s[i]);
                }
                let frac = (a - target) / (a - b);
                return Some(self.times_s[i - 1] + frac * (self.times_s[i] - self.times_s[i - 1]));
            }
        }
        None
    }

    /// Largest |value − reference| over the trace.
    pub fn max_abs_deviation_from(&self, reference: f64) -> f64 {
        self.values
            .iter()
            .map(|v| (v - reference).abs())
            .fold(0.0, f64::max)
    }
}

/// A frequency scan: one observable value per probed frequency, carrying
/// both the frequency axis and the equivalent pulse-spacing axis
/// (spacing = 1/(2ν), in ns) that peak fits operate on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    frequencies_hz: Vec<f64>,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(frequencies_hz: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if frequencies_hz.len() != values.len() {
            return Err(Error::invalid(format!(
                "frequency grid has {} entries but values have {}",
                frequencies_hz.len(),
                values.len()
            )));
        }
        if frequencies_hz.iter().any(|f| *f <= 0.0) {
            return Err(Error::invalid("probe frequencies must be positive"));
        }
        if frequencies_hz
            .iter()
            .chain(values.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("spectrum entries must be finite"));
        }
        Ok(Spectrum {
            frequencies_hz,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pulse-spacing axis in nanoseconds: 1/(2ν) per probed frequency.
    pub fn spacings_ns(&self) -> Vec<f64> {
        self.frequencies_hz
            .iter()
            .map(|f| 1.0e9 / (2.0 * f))
            .collect()
    }

    /// Relative L2 distance between the dip profiles (1 − value) of two
    /// scans on the same grid, normalized by the reference dip profile.
    pub fn relative_l2_dip_distance(&self, reference: &Spectrum) -> Result<f64> {
        if self.frequencies_hz != reference.frequencies_hz {
            return Err(Error::invalid(
                "spectra must share a frequency grid for comparison",
            ));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.values.iter().zip(reference.values.iter()) {
            let da = 1.0 - a;
            let db = 1.0 - b;
            num += (da - db) * (da - db);
            den += db * db;
        }
        if den == 0.0 {
            return Err(Error::invalid(
                "reference spectrum has no dip contrast to compare against",
            ));
        }
        Ok((num / den).sqrt())
    }
}
