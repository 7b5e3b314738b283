//! Damped least-squares (Levenberg–Marquardt) minimization with numeric
//! Jacobians, optional box projection, and a multistart driver.
//!
//! The problems in this crate are tiny (≤ ~10 parameters, ≤ a few hundred
//! residuals), so the implementation favors robustness and determinism over
//! scale: central-difference Jacobians, damping on the diagonal of JᵀJ, and
//! Gaussian elimination for the normal equations.

use crate::error::{Error, Result};

/// Convergence knobs for [`lm_fit`].
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative drop of the sum of squares considered "no progress".
    pub cost_tolerance: f64,
    /// Relative step size considered "no progress".
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 400,
            cost_tolerance: 1e-14,
            step_tolerance: 1e-12,
        }
    }
}

/// Outcome of one minimization.
#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub ssr: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// JᵀJ at the solution (row-major k×k), for covariance estimates.
    pub jtj: Vec<f64>,
    /// Number of residuals.
    pub n_residuals: usize,
}

impl LmResult {
    /// Parameter covariance estimate ssr/(m−k) · (JᵀJ)⁻¹, row-major.
    /// `None` when there are no spare degrees of freedom or JᵀJ is singular.
    pub fn covariance(&self) -> Option<Vec<f64>> {
        let k = self.params.len();
        let m = self.n_residuals;
        if m <= k {
            return None;
        }
        let inv = invert(&self.jtj, k)?;
        let scale = self.ssr / (m - k) as f64;
        Some(inv.into_iter().map(|x| x * scale).collect())
    }
}

fn ssr_of(r: &[f64]) -> f64 {
    let s: f64 = r.iter().map(|x| x * x).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// Solve A·x = b for a dense row-major k×k system by Gaussian elimination
/// with partial pivoting; returns None on (numerical) singularity.
fn solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..k {
        let (piv, pmax) = (col..k)
            .map(|r| (r, m[r * k + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pmax <= f64::EPSILON * k as f64 {
            return None;
        }
        if piv != col {
            for c in 0..k {
                m.swap(col * k + c, piv * k + c);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * k + col];
        for r in (col + 1)..k {
            let f = m[r * k + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                m[r * k + c] -= f * m[col * k + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..k {
            acc -= m[row * k + c] * x[c];
        }
        x[row] = acc / m[row * k + row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; k * k];
    let mut e = vec![0.0; k];
    for col in 0..k {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[col] = 1.0;
        let x = solve(a, &e, k)?;
        for row in 0..k {
            inv[row * k + col] = x[row];
        }
    }
    Some(inv)
}

fn clamp_params(p: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (x, &(lo, hi)) in p.iter_mut().zip(b) {
            *x = x.clamp(lo, hi);
        }
    }
}

/// Minimize Σ rᵢ(p)² starting from `p0`.  `residuals` fills its output slice
/// (fixed length `n_residuals`).  Optional `bounds` are enforced by
/// projecting every trial point.  Never errors: inspect `converged`.
pub fn lm_fit(
    residuals: &dyn Fn(&[f64], &mut [f64]),
    p0: &[f64],
    n_residuals: usize,
    bounds: Option<&[(f64, f64)]>,
    opts: &LmOptions,
) -> LmResult {
    let k = p0.len();
    assert!(k > 0 && n_residuals >= k, "under-determined fit");
    if let Some(b) = bounds {
        assert_eq!(b.len(), k, "one bound pair per parameter");
    }
    let mut p = p0.to_vec();
    clamp_params(&mut p, bounds);

    let mut r = vec![0.0; n_residuals];
    let mut r_trial = vec![0.0; n_residuals];
    residuals(&p, &mut r);
    let mut ssr = ssr_of(&r);

    let mut jac = vec![0.0; n_residuals * k];
    let mut jtj = vec![0.0; k * k];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iter = 0;

    while iter < opts.max_iterations {
        iter += 1;
        // Central-difference Jacobian.
        let mut p_probe = p.clone();
        let mut r_plus = vec![0.0; n_residuals];
        let mut r_minus = vec![0.0; n_residuals];
        for j in 0..k {
            // cbrt(ε)-scaled step balances truncation and roundoff for the
            // central difference.
            let h = 6e-6 * p[j].abs().max(1.0);
            p_probe[j] = p[j] + h;
            residuals(&p_probe, &mut r_plus);
            p_probe[j] = p[j] - h;
            residuals(&p_probe, &mut r_minus);
            p_probe[j] = p[j];
            for i in 0..n_residuals {
                jac[i * k + j] = (r_plus[i] - r_minus[i]) / (2.0 * h);
            }
        }
        // Normal equations JᵀJ and gradient Jᵀr.
        for a in 0..k {
            for b in a..k {
                let mut s = 0.0;
                for i in 0..n_residuals {
                    s += jac[i * k + a] * jac[i * k + b];
                }
                jtj[a * k + b] = s;
                jtj[b * k + a] = s;
            }
        }
        let mut g = vec![0.0; k];
        for a in 0..k {
            let mut s = 0.0;
            for i in 0..n_residuals {
                s += jac[i * k + a] * r[i];
            }
            g[a] = -s;
        }

        // Try damped steps until one reduces the cost.
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for a in 0..k {
                damped[a * k + a] += lambda * jtj[a * k + a].max(1e-30);
            }
            if let Some(delta) = solve(&damped, &g, k) {
                let mut trial: Vec<f64> = p.iter().zip(&delta).map(|(x, d)| x + d).collect();
                clamp_params(&mut trial, bounds);
                residuals(&trial, &mut r_trial);
                let trial_ssr = ssr_of(&r_trial);
                if trial_ssr < ssr {
                    let rel_drop = (ssr - trial_ssr) / ssr.max(1e-300);
                    let rel_step = trial
                        .iter()
                        .zip(&p)
                        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                        .fold(0.0_f64, f64::max);
                    p = trial;
                    std::mem::swap(&mut r, &mut r_trial);
                    ssr = trial_ssr;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel_drop < opts.cost_tolerance || rel_step < opts.step_tolerance {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            // No descent direction left at machine precision: this is a
            // minimum — unless the cost never became finite at all.
            converged = ssr.is_finite();
            break;
        }
        if converged {
            break;
        }
        if ssr == 0.0 {
            converged = true;
            break;
        }
    }

    LmResult {
        params: p,
        ssr,
        converged,
        n_iterations: iter,
        jtj,
        n_residuals,
    }
}

/// Run [`lm_fit`] from several starting points and keep the best converged
/// result (lowest sum of squares).  Errors if no start converges, carrying
/// the best residual norm seen.
pub fn lm_multistart(
    residuals: &dyn Fn(&[f64], &mut [f64]),
    starts: &[Vec<f64>],
    n_residuals: usize,
    bounds: Option<&[(f64, f64)]>,
    opts: &LmOptions,
) -> Result<LmResult> {
    if starts.is_empty() {
        return Err(Error::invalid("no starting points supplied"));
    }
    let mut best: Option<LmResult> = None;
    for s in starts {
        let r = lm_fit(residuals, s, n_residuals, bounds, opts);
        let better = match &best {
            None => true,
            Some(b) => (r.converged, -r.ssr) > (b.converged, -b.ssr),
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(Error::FitFailure(format!(
            "no start converged; best residual norm {:.6e}",
            best.ssr.sqrt()
        )));
    }
    Ok(best)
}

/// Coefficient of determination of a fit: 1 − SSR / SStot.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    assert_eq!(observed.len(), predicted.len());
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    if ss_tot <= 0.0 {
        // Constant data: perfect iff the prediction matches it.
        return if ss_res <= 1e-30 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_parameters() {
        // y = 2.5·exp(−0.7 x) sampled exactly; start far away.
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * (-0.7 * x).exp()).collect();
        let resid = |p: &[f64], out: &mut [f64]| {
            for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
                out[i] = p[0] * (-p[1] * x).exp() - y;
            }
        };
        let r = lm_fit(&resid, &[0.5, 0.1], xs.len(), None, &LmOptions::default());
        assert!(r.converged);
        assert!((r.params[0] - 2.5).abs() < 1e-9, "{:?}", r.params);
        assert!((r.params[1] - 0.7).abs() < 1e-9, "{:?}", r.params);
        assert!(r.ssr < 1e-18);
    }

    #[test]
    fn covariance_matches_linear_regression() {
        // For a linear model the LM covariance must equal the closed-form
        // least-squares covariance.
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        // y = 3 + 2x with a deterministic residual pattern.
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 3.0 + 2.0 * x + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let resid = |p: &[f64], out: &mut [f64]| {
            for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
                out[i] = p[0] + p[1] * x - y;
            }
        };
        let r = lm_fit(&resid, &[0.0, 0.0], xs.len(), None, &LmOptions::default());
        let cov = r.covariance().unwrap();
        // Closed form: σ² (XᵀX)⁻¹ with X = [1 x].
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let det = n * sxx - sx * sx;
        let sigma2 = r.ssr / (xs.len() - 2) as f64;
        let expect00 = sigma2 * sxx / det;
        let expect11 = sigma2 * n / det;
        assert!((cov[0] - expect00).abs() < 1e-10 * expect00);
        assert!((cov[3] - expect11).abs() < 1e-10 * expect11);
    }

    #[test]
    fn bounds_are_respected() {
        // Unconstrained optimum at p = −1; box forces p ∈ [0, 10].
        let resid = |p: &[f64], out: &mut [f64]| {
            out[0] = p[0] + 1.0;
            out[1] = 0.5 * (p[0] + 1.0);
        };
        let r = lm_fit(
            &resid,
            &[5.0],
            2,
            Some(&[(0.0, 10.0)]),
            &LmOptions::default(),
        );
        assert!(r.params[0] >= 0.0);
        assert!(r.params[0] < 1e-9, "should sit on the bound: {:?}", r.params);
    }

    #[test]
    fn multistart_reports_failure_with_residual() {
        // Residuals that are NaN everywhere can never produce a finite
        // improvement; every start must fail.
        let resid = |_: &[f64], out: &mut [f64]| {
            for o in out.iter_mut() {
                *o = f64::NAN;
            }
        };
        let err = lm_multistart(
            &resid,
            &[vec![1.0], vec![2.0]],
            3,
            None,
            &LmOptions {
                max_iterations: 5,
                ..Default::default()
            },
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("fit failure"), "{msg}");
    }

    #[test]
    fn r_squared_reference_values() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!((r_squared(&y, &y) - 1.0).abs() < 1e-15);
        let mean = [2.5, 2.5, 2.5, 2.5];
        assert!(r_squared(&y, &mean).abs() < 1e-15);
    }
}
