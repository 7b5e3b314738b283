//! Spin-dynamics toolkit for nitrogen-vacancy (NV) center experiments on
//! planar clusters of carbon-13 nuclear spins.
//!
//! The crate is organized around two interchangeable evolution engines plus
//! the protocol and analysis layers that drive them:
//!
//! * [`geometry`] — spin layouts (tilted grids, chains) and the dipolar /
//!   hyperfine coupling constants derived from them.
//! * [`hamiltonian`] — secular NV–nuclear Hamiltonians, the spin-lock drive
//!   variant, and nuclear-frame layer Hamiltonians as explicit Pauli-product
//!   term lists.
//! * [`engine`] — the truncated Pauli-string propagator: states are real
//!   expectation vectors over an enumerated low-weight string basis, evolved
//!   by sparse commutator action tables with Taylor stepping.
//! * [`dense`] — a dense density-operator / state-vector reference evolver
//!   for small systems (≤ 12 spins), including optical reset and Markovian
//!   dephasing channels. Used as the correctness oracle for the truncated
//!   engine and for protocols that need exact mixed-state dynamics.
//! * [`sequences`] — pulse-sequence protocols: AXY-8 spectroscopy, NOVEL
//!   polarization transfer and readout, Ramsey / Hahn / WAHUHA layer
//!   coherence runs, and Floquet time-crystal cycles.
//! * [`analysis`] — generalized-normal dip fitting, the variance-to-distance
//!   transfer function with first-order error propagation, power spectral
//!   densities, crystalline-fraction and stretched-exponential decay fits.
//! * [`trace`] — time-trace / spectrum containers with versioned CSV I/O.
//!
//! Conventions used throughout: site 0 is the NV electron spin unless a
//! builder says otherwise, angular frequencies are rad/s internally (Hz only
//! at I/O boundaries), distances are nanometers at API boundaries and are
//! converted internally, and the NV is treated as the two-level subspace
//! {m_s = 0, m_s = −1} with S_z = (σ_z − 1)/2.

pub mod analysis;
pub mod constants;
pub mod dense;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod pauli;
pub mod sequences;
pub mod trace;

pub use error::{Error, Result};
