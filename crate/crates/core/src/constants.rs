//! Physical constants and unit conversions.
//!
//! Internal unit policy: SI base units everywhere (meters, seconds, teslas,
//! rad/s). Public APIs accept nanometers / microseconds / gauss where those
//! are the natural experimental units and convert immediately on entry.

/// π as f64 (re-exported for terseness in formulas).
pub use std::f64::consts::PI;

/// Vacuum magnetic permeability μ₀ [N·A⁻²] (2018 CODATA).
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Reduced Planck constant ħ [J·s] (exact, 2019 SI).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Gyromagnetic ratio of the carbon-13 nucleus [rad·s⁻¹·T⁻¹]
/// (2π × 10.7084 MHz/T).
pub const GAMMA_C13: f64 = 2.0 * PI * 10.7084e6;

/// Gyromagnetic ratio of the NV electron spin [rad·s⁻¹·T⁻¹]
/// (−2π × 28.024 GHz/T; negative because the electron magnetic moment is
/// anti-parallel to its spin).
pub const GAMMA_NV: f64 = -2.0 * PI * 28.024e9;

/// Diamond lattice constant a₀ [m].
pub const DIAMOND_LATTICE_A0: f64 = 0.357e-9;

/// Nearest-neighbour carbon–carbon bond length in diamond [m]
/// (a₀·√3/4 = 0.154 nm).
pub const DIAMOND_BOND_LENGTH: f64 = 0.154e-9;

/// Distance below which the point-dipole coupling formulas stop being
/// trustworthy (two lattice constants' worth of contact-term corrections):
/// builders warn, but do not refuse, below this separation [m].
pub const POINT_DIPOLE_WARN_DISTANCE: f64 = 2.0 * DIAMOND_LATTICE_A0;

/// Gauss → Tesla.
pub const GAUSS_TO_TESLA: f64 = 1e-4;

/// Nanometers → meters.
pub const NM_TO_M: f64 = 1e-9;

/// Microseconds → seconds.
pub const US_TO_S: f64 = 1e-6;

/// Convert a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

/// Convert an angular frequency in rad/s to a frequency in Hz.
#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}
