//! The variance-to-distance transfer function: maps the fitted dip variance
//! (ns²) of a spectroscopy line to the distance (nm) between the center
//! spin and the responsible nucleus, with propagated uncertainty.

use crate::error::{Error, Result};

/// d(v) = a·(v − v₀)^(−b) + d₀, strictly decreasing for v > v₀, with the
/// 1σ uncertainties of its calibration constants.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    /// Prefactor a (nm·ns^(2b)).
    pub a: f64,
    /// Exponent b (dimensionless).
    pub b: f64,
    /// Variance offset v₀ (ns²).
    pub v0_ns2: f64,
    /// Distance offset d₀ (nm).
    pub d0_nm: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub sigma_v0: f64,
    pub sigma_d0: f64,
}

impl Default for TransferFunction {
    /// The calibrated constants of the sensing geometry this crate models.
    fn default() -> Self {
        TransferFunction {
            a: 2.222,
            b: 0.221,
            v0_ns2: 14.87,
            d0_nm: 0.0950,
            sigma_a: 0.017,
            sigma_b: 0.005,
            sigma_v0: 0.25,
            sigma_d0: 0.0127,
        }
    }
}

/// Smallest variance the calibration resolves: below it the line sits
/// beyond the 1.5 nm sensing cut-off and no distance is quoted.
pub const VARIANCE_CUTOFF_NS2: f64 = 22.82;

/// Outcome of a variance-to-distance conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceEstimate {
    /// In-range conversion with its propagated 1σ uncertainty.
    Within { distance_nm: f64, sigma_nm: f64 },
    /// Variance below [`VARIANCE_CUTOFF_NS2`]: farther than the sensing
    /// cut-off, reported without a numeric distance.
    BeyondCutoff,
}

impl TransferFunction {
    fn validate(&self) -> Result<()> {
        let vals = [self.a, self.b, self.v0_ns2, self.d0_nm];
        let sigmas = [self.sigma_a, self.sigma_b, self.sigma_v0, self.sigma_d0];
        if vals.iter().any(|v| !v.is_finite())
            || sigmas.iter().any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(Error::invalid("transfer-function constants must be finite"));
        }
        if self.a <= 0.0 || self.b <= 0.0 {
            return Err(Error::invalid(
                "transfer function must be decreasing: a > 0 and b > 0",
            ));
        }
        Ok(())
    }

    /// Central value d(v); requires v > v₀.
    pub fn distance_nm(&self, v_ns2: f64) -> Result<f64> {
        self.validate()?;
        if !v_ns2.is_finite() || v_ns2 <= self.v0_ns2 {
            return Err(Error::invalid(format!(
                "variance {v_ns2} ns² is outside the transfer-function domain (needs v > {})",
                self.v0_ns2
            )));
        }
        Ok(self.a * (v_ns2 - self.v0_ns2).powf(-self.b) + self.d0_nm)
    }
}

/// Convert a fitted variance (± its 1σ) to a distance estimate.
///
/// Uncertainty is propagated to first order through all five inputs — the
/// variance itself and the four calibration constants — added in
/// quadrature.  Variances at or above the sensing cut-off convert; smaller
/// ones return [`DistanceEstimate::BeyondCutoff`]; v ≤ v₀ is a domain
/// error.
pub fn distance_from_variance(
    v_ns2: f64,
    sigma_v_ns2: f64,
    tf: &TransferFunction,
) -> Result<DistanceEstimate> {
    if !sigma_v_ns2.is_finite() || sigma_v_ns2 < 0.0 {
        return Err(Error::invalid("variance uncertainty must be ≥ 0"));
    }
    let d = tf.distance_nm(v_ns2)?;
    if v_ns2 < VARIANCE_CUTOFF_NS2 {
        return Ok(DistanceEstimate::BeyondCutoff);
    }
    let u = v_ns2 - tf.v0_ns2;
    let core = tf.a * u.powf(-tf.b); // d − d₀
    let dd_dv = -tf.b * core / u;
    let dd_da = core / tf.a;
    let dd_db = -core * u.ln();
    let dd_dv0 = tf.b * core / u;
    let sigma = ((dd_dv * sigma_v_ns2).powi(2)
        + (dd_da * tf.sigma_a).powi(2)
        + (dd_db * tf.sigma_b).powi(2)
        + (dd_dv0 * tf.sigma_v0).powi(2)
        + tf.sigma_d0.powi(2))
    .sqrt();
    Ok(DistanceEstimate::Within {
        distance_nm: d,
        sigma_nm: sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_anchor_rows() {
        let tf = TransferFunction::default();
        // Two strong lines with known conversions.
        let d1 = tf.distance_nm(631.0).unwrap();
        assert!((d1 - 0.631).abs() < 0.005, "d(631) = {d1}");
        let d2 = tf.distance_nm(87.8).unwrap();
        assert!((d2 - 0.955).abs() < 0.005, "d(87.8) = {d2}");
    }

    #[test]
    fn cutoff_boundary_maps_to_cutoff_distance() {
        let tf = TransferFunction::default();
        let d = tf.distance_nm(VARIANCE_CUTOFF_NS2).unwrap();
        assert!((d - 1.5).abs() < 0.005, "boundary distance {d}");
        // At the boundary the conversion is still quoted…
        match distance_from_variance(VARIANCE_CUTOFF_NS2, 1.0, &tf).unwrap() {
            DistanceEstimate::Within { distance_nm, .. } => {
                assert!((distance_nm - 1.5).abs() < 0.005)
            }
            DistanceEstimate::BeyondCutoff => panic!("boundary must convert"),
        }
        // …just below it is beyond the sensing range.
        assert_eq!(
            distance_from_variance(VARIANCE_CUTOFF_NS2 - 1e-9, 1.0, &tf).unwrap(),
            DistanceEstimate::BeyondCutoff
        );
    }

    #[test]
    fn domain_errors() {
        let tf = TransferFunction::default();
        assert!(tf.distance_nm(tf.v0_ns2).is_err());
        assert!(tf.distance_nm(3.0).is_err());
        assert!(distance_from_variance(100.0, -1.0, &tf).is_err());
        assert!(distance_from_variance(f64::NAN, 1.0, &tf).is_err());
    }

    #[test]
    fn strictly_decreasing_on_domain() {
        let tf = TransferFunction::default();
        let mut prev = f64::INFINITY;
        let mut v = tf.v0_ns2 + 0.01;
        while v < 5000.0 {
            let d = tf.distance_nm(v).unwrap();
            assert!(d < prev, "not decreasing at v = {v}");
            prev = d;
            v *= 1.17;
        }
    }

    #[test]
    fn propagated_uncertainty_includes_calibration_terms() {
        // For a strong line the calibration constants dominate the error
        // budget; the variance term alone would be ~30× too small.
        let tf = TransferFunction::default();
        match distance_from_variance(631.0, 4.0, &tf).unwrap() {
            DistanceEstimate::Within { sigma_nm, .. } => {
                assert!(
                    (sigma_nm - 0.0218).abs() < 0.0005,
                    "sigma {sigma_nm}, expected ≈ 0.0218"
                );
            }
            DistanceEstimate::BeyondCutoff => panic!("in-range input"),
        }
        // Zeroing the calibration uncertainties leaves only the tiny
        // variance contribution.
        let exact = TransferFunction {
            sigma_a: 0.0,
            sigma_b: 0.0,
            sigma_v0: 0.0,
            sigma_d0: 0.0,
            ..TransferFunction::default()
        };
        match distance_from_variance(631.0, 4.0, &exact).unwrap() {
            DistanceEstimate::Within { sigma_nm, .. } => {
                assert!(sigma_nm < 1e-3, "variance-only sigma {sigma_nm}");
            }
            DistanceEstimate::BeyondCutoff => panic!("in-range input"),
        }
    }
}
