//! Special functions needed by the fitting layer.

/// Lanczos approximation coefficients (g = 7, 9 terms), good to ~15
/// significant digits over the positive real axis.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for positive arguments.
///
/// Uses the Lanczos series directly for x ≥ 0.5 and the reflection formula
/// below that. Arguments ≤ 0 (where Γ has poles or needs full reflection
/// bookkeeping) return NaN; the fitting layer never needs them.
pub fn ln_gamma(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(3/β) / Γ(1/β), the shape-dependent factor of the generalized-normal
/// variance, evaluated in log space to avoid overflow at small β.
pub fn gen_normal_shape_factor(beta: f64) -> f64 {
    (ln_gamma(3.0 / beta) - ln_gamma(1.0 / beta)).exp()
}

/// Variance of the generalized-normal kernel exp(−(|x−µ|/α)^β):
/// α²·Γ(3/β)/Γ(1/β).
pub fn gen_normal_variance(alpha: f64, beta: f64) -> f64 {
    alpha * alpha * gen_normal_shape_factor(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_anchor_values() {
        // Γ(1/2) = √π, Γ(1) = Γ(2) = 1, Γ(5) = 24, Γ(7/2) = 15√π/8.
        let cases = [
            (0.5, PI.sqrt()),
            (1.0, 1.0),
            (2.0, 1.0),
            (5.0, 24.0),
            (3.5, 15.0 * PI.sqrt() / 8.0),
        ];
        for (x, g) in cases {
            let got = ln_gamma(x).exp();
            assert!(
                ((got - g) / g).abs() < 1e-13,
                "Γ({x}) = {got}, expected {g}"
            );
        }
    }

    #[test]
    fn gamma_recurrence_property() {
        // Γ(x+1) = x·Γ(x) across the range the variance formula visits.
        let mut x = 0.07;
        while x < 40.0 {
            let lhs = ln_gamma(x + 1.0);
            let rhs = x.ln() + ln_gamma(x);
            assert!(
                (lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0),
                "recurrence broke at x = {x}: {lhs} vs {rhs}"
            );
            x *= 1.37;
        }
    }

    #[test]
    fn normal_variance_consistency() {
        // β = 2 must reduce the variance to α²/2 (the Gaussian case).
        for alpha in [0.3, 1.0, 9.633] {
            let v = gen_normal_variance(alpha, 2.0);
            assert!(
                (v - alpha * alpha / 2.0).abs() < 1e-13 * alpha * alpha,
                "β=2 variance {v} != α²/2"
            );
        }
        // β = 1 (Laplace-like kernel) has variance 2α².
        let v1 = gen_normal_variance(1.7, 1.0);
        assert!((v1 - 2.0 * 1.7 * 1.7).abs() < 1e-12);
        // Small β stays finite through the log-space evaluation.
        assert!(gen_normal_variance(1.0, 0.2).is_finite());
    }
}
