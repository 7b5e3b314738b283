//! Post-processing: dip-profile fits, the variance-to-distance transfer
//! function, power spectral densities, crystalline fractions, and
//! stretched-exponential decay fits.
//!
//! The analysis chain mirrors the measurement pipelines:
//!
//! * spectroscopy → [`fit_generalized_normal`] → dip variance →
//!   [`distance_from_variance`] → nucleus distance with uncertainty;
//! * driven cycles → [`fit_decay`] → [`baseline_correct`] → [`psd`] →
//!   [`crystalline_fraction`] / decay-rate curves.

mod decay;
mod distance;
mod genfit;
mod lm;
mod psd;
mod special;

pub use decay::{baseline_correct, envelope_normalize, fit_decay, DecayFit, DecayForm};
pub use distance::{
    distance_from_variance, DistanceEstimate, TransferFunction, VARIANCE_CUTOFF_NS2,
};
pub use genfit::{fit_generalized_normal, fit_generalized_normal_xy, GenNormalFit, GenNormalPeak};
pub use lm::{lm_fit, lm_multistart, r_squared, LmOptions, LmResult};
pub use psd::{crystalline_fraction, psd, psd_of_values, PowerSpectrum};
pub use special::{gen_normal_variance, ln_gamma};
