//! One-sided power spectral densities of cycle-sampled traces and the
//! crystalline fraction extracted from them.

use crate::error::{Error, Result};
use crate::trace::TimeTrace;

/// One-sided power spectrum over ν ∈ [0, 1/2] in inverse sampling cycles.
///
/// Normalized so that the bin powers sum to the time-domain energy Σ xₙ²
/// (interior bins carry the doubled two-sided power).
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    frequencies: Vec<f64>,
    power: Vec<f64>,
    n_samples: usize,
}

impl PowerSpectrum {
    /// Bin frequencies k/N, k = 0 ..= ⌊N/2⌋ (inverse cycles).
    pub fn frequencies_per_cycle(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Whether the ν = 1/2 bin exists (even sample count).
    pub fn has_half_cycle_bin(&self) -> bool {
        self.n_samples % 2 == 0
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Frequency of the strongest bin.
    pub fn peak_frequency(&self) -> f64 {
        let idx = self
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.frequencies[idx]
    }
}

/// Power spectral density of a value series sampled once per cycle.
pub fn psd_of_values(values: &[f64]) -> Result<PowerSpectrum> {
    let n = values.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "power spectrum needs at least 4 samples, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let n_bins = n / 2 + 1;
    let mut frequencies = Vec::with_capacity(n_bins);
    let mut power = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let w = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &x) in values.iter().enumerate() {
            let (s, c) = (w * i as f64).sin_cos();
            re += x * c;
            im += x * s;
        }
        // One-sided normalization: interior bins absorb their mirror image
        // so the bin sum reproduces the time-domain energy.
        let two_sided = (re * re + im * im) / n as f64;
        let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else {
            2.0
        };
        frequencies.push(k as f64 / n as f64);
        power.push(fold * two_sided);
    }
    Ok(PowerSpectrum {
        frequencies,
        power,
        n_samples: n,
    })
}

/// Power spectral density of a cycle-sampled trace (values only; the time
/// axis merely names the cycles).
pub fn psd(trace: &TimeTrace) -> Result<PowerSpectrum> {
    psd_of_values(trace.values())
}

/// Crystalline fraction C = S(ν=1/2) / Σ S(ν) ∈ [0, 1].
///
/// Requires the ν = 1/2 bin, i.e. an even number of samples.  Pass
/// `exclude_dc = true` on baseline-corrected data so the (already removed)
/// ν = 0 component cannot dilute the denominator.
pub fn crystalline_fraction(spectrum: &PowerSpectrum, exclude_dc: bool) -> Result<f64> {
    if !spectrum.has_half_cycle_bin() {
        return Err(Error::invalid(
            "crystalline fraction needs the half-cycle bin: use an even sample count",
        ));
    }
    let nyquist = *spectrum.power.last().expect("non-empty spectrum");
    let start = if exclude_dc { 1 } else { 0 };
    let total: f64 = spectrum.power[start..].iter().sum();
    // Roundoff guard: a numerically empty denominator (relative to the full
    // spectrum energy) means the fraction is undefined, not huge.
    let floor = 1e-12 * spectrum.total_power() + f64::MIN_POSITIVE;
    if total <= floor {
        return Err(Error::invalid(
            "zero total power: crystalline fraction undefined",
        ));
    }
    Ok(nyquist / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_series_is_pure_half_cycle() {
        let x: Vec<f64> = (0..64).map(|n| if n % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let s = psd_of_values(&x).unwrap();
        let c = crystalline_fraction(&s, false).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "C = {c}");
        assert_eq!(s.peak_frequency(), 0.5);
    }

    #[test]
    fn constant_series_is_pure_dc() {
        let x = vec![0.3; 32];
        let s = psd_of_values(&x).unwrap();
        let c = crystalline_fraction(&s, false).unwrap();
        assert!(c.abs() < 1e-12, "C = {c}");
        assert_eq!(s.peak_frequency(), 0.0);
        // With the DC bin excluded there is nothing left: undefined.
        assert!(crystalline_fraction(&s, true).is_err());
    }

    #[test]
    fn parseval_energy_identity() {
        // Deterministic pseudo-random-ish series.
        let x: Vec<f64> = (0..51)
            .map(|n| ((n * n) as f64 * 0.37).sin() + 0.2 * ((n as f64) * 1.9).cos())
            .collect();
        let s = psd_of_values(&x).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let rel = (s.total_power() - energy).abs() / energy;
        assert!(rel < 1e-10, "Parseval violated: rel {rel}");
    }

    #[test]
    fn beat_offset_resolves_angle_error() {
        // cos(1.03π n): the beat frequency 1.03/2 = 0.515 lies above the
        // once-per-cycle Nyquist limit and aliases onto 0.485 — displaced
        // from period doubling by 0.015 inverse cycles in magnitude.
        let theta = 1.03 * std::f64::consts::PI;
        let x: Vec<f64> = (0..200).map(|n| 0.5 * (theta * n as f64).cos()).collect();
        let s = psd_of_values(&x).unwrap();
        let offset = (s.peak_frequency() - 0.5).abs();
        assert!(
            (offset - 0.015).abs() < 1e-12,
            "peak displacement {offset}, expected 0.015"
        );
    }

    #[test]
    fn fraction_bounds_and_validation() {
        assert!(psd_of_values(&[1.0, 2.0, 3.0]).is_err());
        assert!(psd_of_values(&[1.0, f64::NAN, 0.0, 0.0]).is_err());
        // Odd length: no ν = 1/2 bin.
        let s = psd_of_values(&[1.0, -0.5, 0.25, -0.125, 0.0625]).unwrap();
        assert!(crystalline_fraction(&s, false).is_err());
        // Mixed series stays within [0, 1].
        let x: Vec<f64> = (0..40)
            .map(|n| if n % 2 == 0 { 0.4 } else { -0.3 })
            .collect();
        let s = psd_of_values(&x).unwrap();
        let c = crystalline_fraction(&s, false).unwrap();
        assert!((0.0..=1.0).contains(&c), "C = {c}");
    }
}
