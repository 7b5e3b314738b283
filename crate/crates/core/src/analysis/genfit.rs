//! Generalized-normal fits of spectroscopy dip profiles.
//!
//! Dip profiles are fitted in the time domain — against the pulse spacing
//! τ = 1/(2ν) in nanoseconds — with a model of one or two generalized-normal
//! kernels riding on a constant baseline, modulated by an exponential
//! envelope anchored at the left edge of the window:
//!
//! ```text
//! y(τ) = b + exp(−r·(τ − τ_min)) · Σᵢ Aᵢ · exp(−(|τ − µᵢ| / αᵢ)^βᵢ)
//! ```
//!
//! The per-kernel variance αᵢ²·Γ(3/βᵢ)/Γ(1/βᵢ) (ns²) is the quantity the
//! distance transfer function consumes.

use super::lm::{lm_multistart, r_squared, LmOptions, LmResult};
use super::special::{gen_normal_shape_factor, gen_normal_variance};
use crate::error::{Error, Result};
use crate::trace::Spectrum;

/// One fitted kernel, in physical (untransformed) parameters.
#[derive(Debug, Clone)]
pub struct GenNormalPeak {
    /// Kernel center µ (ns).
    pub location_ns: f64,
    /// Kernel scale α (ns).
    pub scale_ns: f64,
    /// Kernel shape β (dimensionless; 2 = Gaussian).
    pub shape: f64,
    /// Signed amplitude A (dips are negative).
    pub amplitude: f64,
    /// Kernel variance α²·Γ(3/β)/Γ(1/β) (ns²).
    pub variance_ns2: f64,
    /// 1σ uncertainty of the variance from the fit covariance.
    pub variance_sigma_ns2: f64,
}

/// Result of [`fit_generalized_normal`].
#[derive(Debug, Clone)]
pub struct GenNormalFit {
    /// Fitted kernels, sorted by location.
    pub peaks: Vec<GenNormalPeak>,
    /// Constant baseline b.
    pub baseline: f64,
    /// Envelope decay rate r (1/ns).
    pub decay_rate_per_ns: f64,
    /// Coefficient of determination over the fitted window.
    pub r_squared: f64,
    /// True when every fitted amplitude is indistinguishable from zero —
    /// the profile carries no dip for the requested model.
    pub degenerate: bool,
    /// Covariance of the physical parameters, row-major over the order
    /// [b, r, (µ, α, β, A) per peak].  Empty when there were no spare
    /// degrees of freedom.
    pub covariance: Vec<f64>,
}

/// Internal parameter layout: [b, r, (µ, ln α, ln β, A) × n_peaks].
fn n_params(n_peaks: usize) -> usize {
    2 + 4 * n_peaks
}

fn model(p: &[f64], x: &[f64], x_min: f64, n_peaks: usize, out: &mut [f64]) {
    let b = p[0];
    let r = p[1];
    for (i, &xi) in x.iter().enumerate() {
        let env = (-r * (xi - x_min)).exp();
        let mut s = 0.0;
        for k in 0..n_peaks {
            let mu = p[2 + 4 * k];
            let alpha = p[3 + 4 * k].exp();
            let beta = p[4 + 4 * k].exp();
            let a = p[5 + 4 * k];
            s += a * (-((xi - mu).abs() / alpha).powf(beta)).exp();
        }
        out[i] = b + env * s;
    }
}

/// Peak-location seeds: indices of the strongest deviations from the median,
/// kept mutually separated by an eighth of the window.
fn seed_locations(x: &[f64], dev: &[f64], n_peaks: usize) -> Vec<usize> {
    let span = x[x.len() - 1] - x[0];
    let min_sep = span / 8.0;
    let mut order: Vec<usize> = (0..dev.len()).collect();
    order.sort_by(|&a, &b| dev[b].abs().total_cmp(&dev[a].abs()));
    let mut picked: Vec<usize> = Vec::new();
    for idx in order {
        if picked.iter().all(|&p| (x[idx] - x[p]).abs() >= min_sep) {
            picked.push(idx);
            if picked.len() == n_peaks {
                break;
            }
        }
    }
    // Degenerate profiles may not offer enough separated seeds; pad with the
    // window center.
    while picked.len() < n_peaks {
        picked.push(x.len() / 2);
    }
    picked
}

/// Half-width (in x units) at which |deviation| falls to half its peak,
/// scanned outward from `idx`; floors at one grid step.
fn half_width(x: &[f64], dev: &[f64], idx: usize) -> f64 {
    let target = dev[idx].abs() / 2.0;
    let mut w = f64::INFINITY;
    for i in (0..idx).rev() {
        if dev[i].abs() <= target {
            w = w.min(x[idx] - x[i]);
            break;
        }
    }
    for i in (idx + 1)..x.len() {
        if dev[i].abs() <= target {
            w = w.min(x[i] - x[idx]);
            break;
        }
    }
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if w.is_finite() {
        w.max(step)
    } else {
        4.0 * step
    }
}

/// Fit `n_peaks` ∈ {1, 2} generalized-normal kernels to samples (x, y) with
/// x in nanoseconds.  `x` must be strictly increasing.
pub fn fit_generalized_normal_xy(
    x: &[f64],
    y: &[f64],
    n_peaks: usize,
) -> Result<GenNormalFit> {
    if !(1..=2).contains(&n_peaks) {
        return Err(Error::invalid("peak count must be 1 or 2"));
    }
    let k = n_params(n_peaks);
    if x.len() != y.len() {
        return Err(Error::invalid("x/y length mismatch"));
    }
    if x.len() < k + 2 {
        return Err(Error::invalid(format!(
            "need at least {} samples to fit {} peak(s), got {}",
            k + 2,
            n_peaks,
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("x axis must be strictly increasing"));
    }

    let x_min = x[0];
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let dev: Vec<f64> = y.iter().map(|v| v - median).collect();
    let seeds = seed_locations(x, &dev, n_peaks);

    // Scale-aware floor used for bounds and the degeneracy test.
    let spread = sorted[sorted.len() - 1] - sorted[0];
    let span = x[x.len() - 1] - x[0];

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for &beta0 in &[2.0_f64, 1.3, 3.0] {
        for &r0 in &[0.0, 1.0 / span] {
            let mut p = vec![median, r0];
            for &s in &seeds {
                let alpha0 = (half_width(x, &dev, s) * 1.2).max(span / 200.0);
                p.extend_from_slice(&[x[s], alpha0.ln(), beta0.ln(), dev[s]]);
            }
            starts.push(p);
        }
    }

    // Box bounds: locations inside the window (with one-step slack), scales
    // between a fraction of a grid step and the window span, shapes in
    // [0.15, 24], amplitudes within a few spreads, envelope rate bounded by
    // several e-folds over the window.
    let step = span / (x.len() - 1) as f64;
    let amp_cap = (spread.abs() * 4.0).max(1e-6);
    let mut bounds: Vec<(f64, f64)> = vec![
        (sorted[0] - spread - 1.0, sorted[sorted.len() - 1] + spread + 1.0),
        (-8.0 / span, 8.0 / span),
    ];
    for _ in 0..n_peaks {
        bounds.push((x_min - step, x[x.len() - 1] + step));
        bounds.push(((step / 8.0).ln(), (2.0 * span).ln()));
        bounds.push((0.15_f64.ln(), 24.0_f64.ln()));
        bounds.push((-amp_cap, amp_cap));
    }

    let resid = |p: &[f64], out: &mut [f64]| {
        model(p, x, x_min, n_peaks, out);
        for (o, &yi) in out.iter_mut().zip(y) {
            *o -= yi;
        }
    };
    let best = lm_multistart(&resid, &starts, x.len(), Some(&bounds), &LmOptions::default())?;
    finish_fit(best, x, y, x_min, n_peaks, spread)
}

fn finish_fit(
    best: LmResult,
    x: &[f64],
    y: &[f64],
    x_min: f64,
    n_peaks: usize,
    spread: f64,
) -> Result<GenNormalFit> {
    let p = &best.params;
    let k = p.len();
    let mut predicted = vec![0.0; x.len()];
    model(p, x, x_min, n_peaks, &mut predicted);
    let r2 = r_squared(y, &predicted);

    // Covariance in internal coordinates, then rescaled to physical ones
    // (∂α/∂ln α = α, ∂β/∂ln β = β; other parameters are identical).
    let cov_int = best.covariance().unwrap_or_default();
    let mut jac_diag = vec![1.0; k];
    for pk in 0..n_peaks {
        jac_diag[3 + 4 * pk] = p[3 + 4 * pk].exp();
        jac_diag[4 + 4 * pk] = p[4 + 4 * pk].exp();
    }
    let cov_phys: Vec<f64> = if cov_int.is_empty() {
        Vec::new()
    } else {
        (0..k * k)
            .map(|i| {
                let (r, c) = (i / k, i % k);
                cov_int[i] * jac_diag[r] * jac_diag[c]
            })
            .collect()
    };

    let mut peaks = Vec::with_capacity(n_peaks);
    for pk in 0..n_peaks {
        let mu = p[2 + 4 * pk];
        let alpha = p[3 + 4 * pk].exp();
        let beta = p[4 + 4 * pk].exp();
        let a = p[5 + 4 * pk];
        let v = gen_normal_variance(alpha, beta);

        // Delta method over the (ln α, ln β) block: v = α²·g(β) gives
        // ∂v/∂lnα = 2v and ∂v/∂lnβ = α²·g'(β)·β.
        let sigma_v = if cov_int.is_empty() {
            f64::NAN
        } else {
            let db = 1e-6 * beta;
            let gp = (gen_normal_shape_factor(beta + db)
                - gen_normal_shape_factor(beta - db))
                / (2.0 * db);
            let grad = [2.0 * v, alpha * alpha * gp * beta];
            let ia = 3 + 4 * pk;
            let ib = 4 + 4 * pk;
            let q = grad[0] * grad[0] * cov_int[ia * k + ia]
                + 2.0 * grad[0] * grad[1] * cov_int[ia * k + ib]
                + grad[1] * grad[1] * cov_int[ib * k + ib];
            q.max(0.0).sqrt()
        };
        peaks.push(GenNormalPeak {
            location_ns: mu,
            scale_ns: alpha,
            shape: beta,
            amplitude: a,
            variance_ns2: v,
            variance_sigma_ns2: sigma_v,
        });
    }
    peaks.sort_by(|a, b| a.location_ns.total_cmp(&b.location_ns));

    let amp_floor = 1e-10 + 1e-6 * spread.abs();
    let degenerate = peaks.iter().all(|pk| pk.amplitude.abs() <= amp_floor);

    Ok(GenNormalFit {
        peaks,
        baseline: p[0],
        decay_rate_per_ns: p[1],
        r_squared: r2,
        degenerate,
        covariance: cov_phys,
    })
}

/// Fit a spectroscopy dip profile in the time domain.  The spectrum's
/// frequency axis is converted to pulse spacings τ = 1/(2ν) in ns and
/// reordered to ascending τ before fitting.
pub fn fit_generalized_normal(spectrum: &Spectrum, n_peaks: usize) -> Result<GenNormalFit> {
    let spacings = spectrum.spacings_ns();
    let mut pairs: Vec<(f64, f64)> = spacings
        .into_iter()
        .zip(spectrum.values().iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    fit_generalized_normal_xy(&x, &y, n_peaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(x: f64, mu: f64, alpha: f64, beta: f64) -> f64 {
        (-((x - mu).abs() / alpha).powf(beta)).exp()
    }

    #[test]
    fn recovers_its_own_model_class() {
        // Ground truth: one kernel on a baseline with a mild envelope.
        let (mu, alpha, beta, a, b, r) = (780.0, 12.0, 2.6, -0.45, 1.0, 4e-4);
        let x: Vec<f64> = (0..120).map(|i| 700.0 + i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| b + (-r * (xi - 700.0)).exp() * a * kernel(xi, mu, alpha, beta))
            .collect();
        let fit = fit_generalized_normal_xy(&x, &y, 1).unwrap();
        let pk = &fit.peaks[0];
        assert!((pk.location_ns - mu).abs() / mu < 1e-4, "{:?}", pk);
        assert!((pk.scale_ns - alpha).abs() / alpha < 1e-4, "{:?}", pk);
        assert!((pk.shape - beta).abs() / beta < 1e-4, "{:?}", pk);
        assert!((pk.amplitude - a).abs() / a.abs() < 1e-4, "{:?}", pk);
        assert!((fit.baseline - b).abs() < 1e-6);
        assert!((fit.decay_rate_per_ns - r).abs() / r < 1e-3);
        assert!(fit.r_squared > 0.999999);
        assert!(!fit.degenerate);
        let v_true = gen_normal_variance(alpha, beta);
        assert!((pk.variance_ns2 - v_true).abs() / v_true < 1e-4);
    }

    #[test]
    fn gaussian_dip_variance_matches_generator() {
        // β = 2 with variance 46.4 ns² → α = √(2·46.4).
        let v_true = 46.4_f64;
        let alpha = (2.0 * v_true).sqrt();
        let mu = 778.0;
        let x: Vec<f64> = (0..90).map(|i| 740.0 + i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| 1.0 - 0.5 * kernel(xi, mu, alpha, 2.0))
            .collect();
        let fit = fit_generalized_normal_xy(&x, &y, 1).unwrap();
        let pk = &fit.peaks[0];
        assert!(
            (pk.variance_ns2 - v_true).abs() < 1e-3,
            "v = {} ± {}",
            pk.variance_ns2,
            pk.variance_sigma_ns2
        );
        assert!((pk.shape - 2.0).abs() < 1e-4);
    }

    #[test]
    fn two_dips_fit_jointly() {
        let x: Vec<f64> = (0..160).map(|i| 700.0 + i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| {
                1.0 - 0.35 * kernel(xi, 745.0, 9.0, 2.0) - 0.2 * kernel(xi, 815.0, 14.0, 3.0)
            })
            .collect();
        let fit = fit_generalized_normal_xy(&x, &y, 2).unwrap();
        assert_eq!(fit.peaks.len(), 2);
        assert!((fit.peaks[0].location_ns - 745.0).abs() < 0.05, "{:?}", fit.peaks);
        assert!((fit.peaks[1].location_ns - 815.0).abs() < 0.05, "{:?}", fit.peaks);
        assert!((fit.peaks[0].scale_ns - 9.0).abs() < 0.05);
        assert!((fit.peaks[1].scale_ns - 14.0).abs() < 0.05);
        assert!(fit.r_squared > 0.99999);
    }

    #[test]
    fn flat_profile_is_flagged_or_rejected() {
        let x: Vec<f64> = (0..40).map(|i| 700.0 + 2.0 * i as f64).collect();
        let y = vec![1.0; 40];
        match fit_generalized_normal_xy(&x, &y, 1) {
            Ok(fit) => assert!(fit.degenerate, "flat profile must be flagged: {fit:?}"),
            Err(e) => assert!(matches!(e, Error::FitFailure(_)), "{e}"),
        }
    }

    #[test]
    fn time_axis_scaling_scales_variance_quadratically() {
        let x: Vec<f64> = (0..100).map(|i| 700.0 + i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| 1.0 - 0.4 * kernel(xi, 750.0, 11.0, 1.7))
            .collect();
        let fit1 = fit_generalized_normal_xy(&x, &y, 1).unwrap();
        let s = 3.5;
        let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
        let fit2 = fit_generalized_normal_xy(&xs, &y, 1).unwrap();
        let ratio = fit2.peaks[0].variance_ns2 / fit1.peaks[0].variance_ns2;
        assert!(
            (ratio - s * s).abs() / (s * s) < 1e-6,
            "variance must scale as s²: ratio {ratio}"
        );
    }

    #[test]
    fn input_validation() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y = vec![1.0; 30];
        assert!(fit_generalized_normal_xy(&x, &y, 0).is_err());
        assert!(fit_generalized_normal_xy(&x, &y, 3).is_err());
        assert!(fit_generalized_normal_xy(&x, &y[..29], 1).is_err());
        let mut bad = x.clone();
        bad[5] = bad[4];
        assert!(fit_generalized_normal_xy(&bad, &y, 1).is_err());
        assert!(fit_generalized_normal_xy(&x[..6], &y[..6], 1).is_err());
    }
}
