//! Stretched-exponential decay fits of driven-cycle traces, and the
//! baseline correction they feed.

use super::lm::{lm_multistart, r_squared, LmOptions};
use crate::error::{Error, Result};
use crate::trace::TimeTrace;

/// Oscillation form of the winning decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayForm {
    /// a·cos(θN)·exp(−(ΓN)^n) + b — response follows the drive angle.
    AngleLocked,
    /// a·cos(πN)·exp(−(ΓN)^n) + b — rigid period-doubled response.
    PeriodDoubled,
}

/// Result of [`fit_decay`]: the better of the two candidate forms.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub form: DecayForm,
    /// The oscillation frequency actually used (θ or π, rad/cycle).
    pub angular_frequency: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// Decay rate Γ per cycle (≥ 0).
    pub gamma_per_cycle: f64,
    /// Stretch exponent n (> 0).
    pub stretch: f64,
    pub r_squared: f64,
    /// R² of the losing candidate form, for model-selection diagnostics.
    pub alternative_r_squared: f64,
}

/// Samples used for fitting: cycles 0 ..= 40 (the early-time window where
/// the decay model is meaningful).
const FIT_WINDOW_CYCLES: usize = 40;

struct SingleForm {
    amplitude: f64,
    baseline: f64,
    gamma: f64,
    stretch: f64,
    r_squared: f64,
}

/// Model in internal coordinates p = [a, b, g, q] with Γ = g², n = exp(q):
/// the square keeps Γ ≥ 0 with smooth behavior through zero, the log keeps
/// n > 0.
fn eval(p: &[f64], w: f64, n_idx: usize, out: &mut [f64]) {
    let (a, b, g, q) = (p[0], p[1], p[2], p[3]);
    let gamma = g * g;
    let stretch = q.exp();
    for (i, o) in out.iter_mut().enumerate().take(n_idx) {
        let nn = i as f64;
        let envelope = (-(gamma * nn).powf(stretch)).exp();
        *o = a * (w * nn).cos() * envelope + b;
    }
}

fn fit_single_form(values: &[f64], w: f64) -> Result<SingleForm> {
    let m = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[m / 2];
    let a0 = values[0] - median;

    let mut starts = Vec::new();
    for &g0 in &[1e-3_f64, 0.05, 0.15, 0.4] {
        for &n0 in &[1.0_f64, 2.0] {
            starts.push(vec![a0, median, g0.sqrt(), n0.ln()]);
        }
    }
    // Bounds: amplitude/baseline within the data range (with slack), g
    // within [0, 1.4] (Γ ≤ 2 per cycle is already total decay), stretch in
    // [0.2, 5].
    let spread = (sorted[m - 1] - sorted[0]).max(1e-12);
    let bounds = [
        (-3.0 * spread - 1.0, 3.0 * spread + 1.0),
        (sorted[0] - spread, sorted[m - 1] + spread),
        (0.0, 1.4),
        (0.2_f64.ln(), 5.0_f64.ln()),
    ];
    let resid = |p: &[f64], out: &mut [f64]| {
        eval(p, w, m, out);
        for (o, &y) in out.iter_mut().zip(values) {
            *o -= y;
        }
    };
    let best = lm_multistart(&resid, &starts, m, Some(&bounds), &LmOptions::default())?;
    let mut predicted = vec![0.0; m];
    eval(&best.params, w, m, &mut predicted);
    Ok(SingleForm {
        amplitude: best.params[0],
        baseline: best.params[1],
        gamma: best.params[2] * best.params[2],
        stretch: best.params[3].exp(),
        r_squared: r_squared(values, &predicted),
    })
}

/// Fit the per-cycle trace with both candidate forms — oscillation at the
/// drive angle θ and rigid period doubling at π — over the first
/// [`FIT_WINDOW_CYCLES`] cycles, and return the form with the higher R².
pub fn fit_decay(trace: &TimeTrace, theta_rad: f64) -> Result<DecayFit> {
    if !theta_rad.is_finite() || theta_rad <= 0.0 {
        return Err(Error::invalid("drive angle must be positive and finite"));
    }
    let all = trace.values();
    if all.len() < 10 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 10 cycle samples, got {}",
            all.len()
        )));
    }
    let window = &all[..all.len().min(FIT_WINDOW_CYCLES + 1)];

    let pi = std::f64::consts::PI;
    let locked = fit_single_form(window, theta_rad);
    let doubled = fit_single_form(window, pi);
    let (locked, doubled) = match (locked, doubled) {
        (Ok(l), Ok(d)) => (Some(l), Some(d)),
        (Ok(l), Err(_)) => (Some(l), None),
        (Err(_), Ok(d)) => (None, Some(d)),
        (Err(e), Err(_)) => return Err(e),
    };
    let pick = |form: DecayForm, won: SingleForm, lost_r2: f64, w: f64| DecayFit {
        form,
        angular_frequency: w,
        amplitude: won.amplitude,
        baseline: won.baseline,
        gamma_per_cycle: won.gamma,
        stretch: won.stretch,
        r_squared: won.r_squared,
        alternative_r_squared: lost_r2,
    };
    Ok(match (locked, doubled) {
        (Some(l), Some(d)) => {
            if l.r_squared >= d.r_squared {
                pick(DecayForm::AngleLocked, l, d.r_squared, theta_rad)
            } else {
                pick(DecayForm::PeriodDoubled, d, l.r_squared, pi)
            }
        }
        (Some(l), None) => pick(DecayForm::AngleLocked, l, f64::NAN, theta_rad),
        (None, Some(d)) => pick(DecayForm::PeriodDoubled, d, f64::NAN, pi),
        (None, None) => unreachable!("double failure already returned"),
    })
}

/// Subtract the fitted baseline from every sample.
pub fn baseline_correct(trace: &TimeTrace, fit: &DecayFit) -> TimeTrace {
    let values: Vec<f64> = trace.values().iter().map(|v| v - fit.baseline).collect();
    TimeTrace::new(trace.times_s().to_vec(), values)
        .expect("shifting values preserves trace validity")
}

/// Remove the fitted baseline and divide out the fitted decay envelope,
/// leaving a constant-amplitude oscillation. This separates the two
/// quantities a periodically driven trace carries: the phase purity of the
/// subharmonic response (read off the spectrum of the normalized trace) and
/// the amplitude decay rate (already captured by the fit itself). Without
/// the normalization, the decay envelope leaks spectral weight into
/// sidebands around the subharmonic bin and caps the spectral fraction well
/// below one even for a perfectly phase-locked response.
///
/// The envelope is evaluated per cycle index and floored at a small positive
/// value so late, fully decayed samples cannot blow up the normalized trace.
pub fn envelope_normalize(trace: &TimeTrace, fit: &DecayFit) -> TimeTrace {
    const ENVELOPE_FLOOR: f64 = 1.0e-3;
    let values: Vec<f64> = trace
        .values()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let env = (-(fit.gamma_per_cycle.max(0.0) * n as f64).powf(fit.stretch)).exp();
            (v - fit.baseline) / env.max(ENVELOPE_FLOOR)
        })
        .collect();
    TimeTrace::new(trace.times_s().to_vec(), values)
        .expect("rescaling values preserves trace validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn trace_from(values: Vec<f64>) -> TimeTrace {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * 1e-6).collect();
        TimeTrace::new(times, values).unwrap()
    }

    #[test]
    fn recovers_known_rate() {
        // a·cos(πN)·exp(−(0.05N)^1) + 0
        let values: Vec<f64> = (0..41)
            .map(|n| 0.5 * (PI * n as f64).cos() * (-(0.05 * n as f64)).exp())
            .collect();
        let fit = fit_decay(&trace_from(values), 1.03 * PI).unwrap();
        assert_eq!(fit.form, DecayForm::PeriodDoubled);
        assert!(
            (fit.gamma_per_cycle - 0.05).abs() / 0.05 < 0.02,
            "Γ = {}",
            fit.gamma_per_cycle
        );
        assert!((fit.stretch - 1.0).abs() < 0.02, "n = {}", fit.stretch);
        assert!((fit.amplitude - 0.5).abs() < 1e-3);
        assert!(fit.baseline.abs() < 1e-4);
    }

    #[test]
    fn envelope_normalization_flattens_decaying_oscillation() {
        // 0.4·cos(πN)·exp(−(0.03N)^1.3) + 0.05 → after normalization every
        // sample should sit at ±0.4 (constant amplitude, baseline removed).
        let values: Vec<f64> = (0..41)
            .map(|n| {
                let n = n as f64;
                0.4 * (PI * n).cos() * (-(0.03 * n).powf(1.3)).exp() + 0.05
            })
            .collect();
        let trace = trace_from(values);
        let fit = fit_decay(&trace, 1.03 * PI).unwrap();
        let flat = envelope_normalize(&trace, &fit);
        for (n, v) in flat.values().iter().enumerate() {
            assert!(
                (v.abs() - 0.4).abs() < 5e-3,
                "sample {n} has |v| = {} after normalization",
                v.abs()
            );
        }
    }

    #[test]
    fn beating_trace_prefers_the_angle_form() {
        // Noiseless beat at θ = 1.03π with no decay: the angle-locked form
        // reproduces it exactly; the period-doubled form cannot.
        let theta = 1.03 * PI;
        let values: Vec<f64> = (0..41).map(|n| 0.5 * (theta * n as f64).cos()).collect();
        let fit = fit_decay(&trace_from(values), theta).unwrap();
        assert_eq!(fit.form, DecayForm::AngleLocked);
        assert!(fit.r_squared > 0.999999, "R² = {}", fit.r_squared);
        assert!(
            fit.alternative_r_squared < fit.r_squared,
            "alternative must lose: {} vs {}",
            fit.alternative_r_squared,
            fit.r_squared
        );
        assert!(fit.gamma_per_cycle < 1e-3, "Γ = {}", fit.gamma_per_cycle);
    }

    #[test]
    fn stretched_envelope_recovers_exponent() {
        let values: Vec<f64> = (0..41)
            .map(|n| 0.4 * (PI * n as f64).cos() * (-((0.08 * n as f64).powf(1.8))).exp() + 0.1)
            .collect();
        let fit = fit_decay(&trace_from(values), PI * 1.01).unwrap();
        assert!((fit.gamma_per_cycle - 0.08).abs() / 0.08 < 0.02);
        assert!((fit.stretch - 1.8).abs() / 1.8 < 0.02, "n = {}", fit.stretch);
        assert!((fit.baseline - 0.1).abs() < 1e-3);
    }

    #[test]
    fn window_limits_to_early_cycles() {
        // A late-time corruption beyond cycle 40 must not affect the fit.
        let mut values: Vec<f64> = (0..80)
            .map(|n| 0.5 * (PI * n as f64).cos() * (-(0.05 * n as f64)).exp())
            .collect();
        for v in values.iter_mut().skip(41) {
            *v = 7.0;
        }
        let fit = fit_decay(&trace_from(values), 1.1 * PI).unwrap();
        assert!((fit.gamma_per_cycle - 0.05).abs() / 0.05 < 0.02);
    }

    #[test]
    fn baseline_correction_zeroes_known_offset() {
        let values: Vec<f64> = (0..41)
            .map(|n| 0.5 * (PI * n as f64).cos() * (-(0.1 * n as f64)).exp() + 0.3)
            .collect();
        let trace = trace_from(values);
        let fit = fit_decay(&trace, PI).unwrap();
        assert!((fit.baseline - 0.3).abs() < 1e-6);
        let corrected = baseline_correct(&trace, &fit);
        // Pointwise, the correction must recover the pure oscillation part.
        for (n, v) in corrected.values().iter().enumerate() {
            let osc = 0.5 * (PI * n as f64).cos() * (-(0.1 * n as f64)).exp();
            assert!((v - osc).abs() < 1e-6, "cycle {n}: {v} vs {osc}");
        }
        // …whose own mean (a decaying alternating series) is ~0.0065, so the
        // corrected mean is near zero only at that scale.
        let mean: f64 =
            corrected.values().iter().sum::<f64>() / corrected.values().len() as f64;
        assert!(mean.abs() < 0.01, "corrected mean {mean}");
        // Zero baseline: identity.
        let id_fit = DecayFit {
            baseline: 0.0,
            ..fit
        };
        let same = baseline_correct(&trace, &id_fit);
        for (a, b) in same.values().iter().zip(trace.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn validation() {
        let short = trace_from((0..5).map(|n| n as f64).collect());
        assert!(fit_decay(&short, PI).is_err());
        let ok = trace_from((0..12).map(|n| (PI * n as f64).cos()).collect());
        assert!(fit_decay(&ok, -1.0).is_err());
        assert!(fit_decay(&ok, PI).is_ok());
    }
}
