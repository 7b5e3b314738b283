//! Schedule execution engines.
//!
//! [`Engine`] abstracts the four primitive operations a [`PulseSchedule`]
//! needs — instantaneous pulses, free evolution under a labeled Hamiltonian,
//! optical reset of the center spin, and observable readout — so every
//! protocol runs unchanged on either backend:
//!
//! * [`TruncatedEngine`] propagates expectation coefficients over a truncated
//!   operator basis (linear cost in basis size; scales to ~100 nuclei).
//! * [`DenseEngine`] propagates a dense statevector or density matrix via
//!   exact eigendecomposition (exponential cost; the small-system oracle).
//!
//! Running one schedule on both engines and comparing outputs is the
//! standing cross-validation used throughout the test suite.

use crate::dense::{DenseState, EigenPropagator};
use crate::engine::{
    enumerate_basis, evolve, precompute_action, ActionTable, StepControls, TruncatedBasis,
    TruncatedState, TruncationRule,
};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianTerms;
use crate::pauli::{Axis, PauliProduct};

use super::schedule::{EventKind, ObservableSpec, PulseAxis, PulseSchedule, SiteSet};

/// Primitive operations a schedule needs from a simulation backend.
///
/// Site indexing is the backend's own; `center_site` tells the executor
/// which index (if any) carries the central electronic spin, and every other
/// index is a nuclear site.
pub trait Engine {
    fn n_sites(&self) -> usize;

    /// Index of the central electronic spin, or `None` for nuclear-only
    /// systems.
    fn center_site(&self) -> Option<usize>;

    /// Instantaneous rotation by `angle_rad` about `axis` on each listed site.
    fn pulse(&mut self, sites: &[usize], axis: &PulseAxis, angle_rad: f64) -> Result<()>;

    /// Free evolution for `duration_s` under the generator labeled
    /// `hamiltonian`.
    fn free(&mut self, hamiltonian: usize, duration_s: f64) -> Result<()>;

    /// Optical reset of the central spin to its polarized state.
    fn laser_reset(&mut self) -> Result<()>;

    fn measure(&self, observable: &ObservableSpec) -> Result<f64>;
}

/// Expand a [`SiteSet`] into concrete site indices for an engine.
pub fn resolve_site_set(
    set: &SiteSet,
    n_sites: usize,
    center: Option<usize>,
) -> Result<Vec<usize>> {
    match set {
        SiteSet::Center => {
            let c = center.ok_or_else(|| {
                Error::invalid("schedule addresses the center spin but the engine has none")
            })?;
            Ok(vec![c])
        }
        SiteSet::Nuclei => Ok((0..n_sites).filter(|&s| Some(s) != center).collect()),
        SiteSet::All => Ok((0..n_sites).collect()),
        SiteSet::Listed(sites) => {
            for &s in sites {
                if s >= n_sites {
                    return Err(Error::invalid(format!(
                        "site {s} out of range for {n_sites}-site engine"
                    )));
                }
            }
            Ok(sites.clone())
        }
    }
}

fn nuclear_sites(n_sites: usize, center: Option<usize>) -> Vec<usize> {
    (0..n_sites).filter(|&s| Some(s) != center).collect()
}

/// Execute a schedule, returning one value per `Measure` event in order.
pub fn run_schedule(engine: &mut dyn Engine, schedule: &PulseSchedule) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(schedule.n_measurements());
    for event in schedule.events() {
        match &event.kind {
            EventKind::Pulse {
                sites,
                axis,
                angle_rad,
            } => {
                let resolved = resolve_site_set(sites, engine.n_sites(), engine.center_site())?;
                engine.pulse(&resolved, axis, *angle_rad)?;
            }
            EventKind::Free {
                duration_s,
                hamiltonian,
            } => engine.free(*hamiltonian, *duration_s)?,
            EventKind::LaserReset => engine.laser_reset()?,
            EventKind::Measure(obs) => out.push(engine.measure(obs)?),
        }
    }
    Ok(out)
}

/// Backend choice plus its tuning knobs, as protocols accept it.
#[derive(Debug, Clone)]
pub enum EngineChoice {
    Truncated {
        rule: TruncationRule,
        controls: StepControls,
    },
    Dense,
}

impl EngineChoice {
    /// Truncated backend at default accuracy with the default basis rule.
    pub fn truncated_default() -> Self {
        EngineChoice::Truncated {
            rule: TruncationRule::default(),
            controls: StepControls::default(),
        }
    }

    /// Truncated backend tuned for oracle-grade agreement checks.
    pub fn truncated_high_accuracy() -> Self {
        EngineChoice::Truncated {
            rule: TruncationRule::default(),
            controls: StepControls::high_accuracy(),
        }
    }
}

// ---------------------------------------------------------------------------
// Truncated backend
// ---------------------------------------------------------------------------

/// Schedule executor over the truncated operator basis.  Site 0 is always
/// the central spin; sites 1..=n are nuclei.
pub struct TruncatedEngine {
    basis: TruncatedBasis,
    tables: Vec<ActionTable>,
    controls: StepControls,
    state: TruncatedState,
}

impl TruncatedEngine {
    /// Enumerate the basis for `n_nuclei` nuclei under `rule` and precompute
    /// one action table per Hamiltonian.  Every Hamiltonian must cover the
    /// same `1 + n_nuclei` sites (center first).  The initial state is the
    /// center polarized, nuclei unpolarized.
    pub fn build(
        n_nuclei: usize,
        rule: &TruncationRule,
        hamiltonians: &[&HamiltonianTerms],
        controls: StepControls,
    ) -> Result<Self> {
        controls.validate()?;
        let basis = enumerate_basis(n_nuclei, rule)?;
        let mut tables = Vec::with_capacity(hamiltonians.len());
        for h in hamiltonians {
            if h.n_sites() != basis.n_sites() {
                return Err(Error::invalid(format!(
                    "hamiltonian covers {} sites but the basis covers {}",
                    h.n_sites(),
                    basis.n_sites()
                )));
            }
            tables.push(precompute_action(h, &basis)?);
        }
        let state = TruncatedState::nv_polarized(&basis);
        Ok(Self {
            basis,
            tables,
            controls,
            state,
        })
    }

    /// Build from already-computed tables (e.g. loaded from a cache).  Each
    /// table must have been computed against exactly this basis.
    pub fn from_tables(
        basis: TruncatedBasis,
        tables: Vec<ActionTable>,
        controls: StepControls,
    ) -> Result<Self> {
        controls.validate()?;
        for t in &tables {
            if t.basis_hash() != basis.content_hash() {
                return Err(Error::CacheMismatch(
                    "action table was computed for a different basis".into(),
                ));
            }
        }
        let state = TruncatedState::nv_polarized(&basis);
        Ok(Self {
            basis,
            tables,
            controls,
            state,
        })
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn controls(&self) -> &StepControls {
        &self.controls
    }

    pub fn state(&self) -> &TruncatedState {
        &self.state
    }

    pub fn set_state(&mut self, state: TruncatedState) -> Result<()> {
        if state.coefficients().len() != self.basis.len() {
            return Err(Error::invalid(
                "state length does not match the engine basis",
            ));
        }
        self.state = state;
        Ok(())
    }

    /// Reset to center-polarized, nuclei-unpolarized.
    pub fn reset_state(&mut self) {
        self.state = TruncatedState::nv_polarized(&self.basis);
    }
}

impl Engine for TruncatedEngine {
    fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    fn center_site(&self) -> Option<usize> {
        Some(0)
    }

    fn pulse(&mut self, sites: &[usize], axis: &PulseAxis, angle_rad: f64) -> Result<()> {
        match axis {
            PulseAxis::Cartesian(a) => self.state.apply_pulse(&self.basis, sites, *a, angle_rad),
            PulseAxis::Equatorial { phi_rad } => {
                self.state
                    .apply_pulse_phase(&self.basis, sites, *phi_rad, angle_rad)
            }
        }
        Ok(())
    }

    fn free(&mut self, hamiltonian: usize, duration_s: f64) -> Result<()> {
        let table = self.tables.get(hamiltonian).ok_or_else(|| {
            Error::invalid(format!(
                "schedule references hamiltonian {hamiltonian} but the engine holds {}",
                self.tables.len()
            ))
        })?;
        evolve(&mut self.state, table, duration_s, &self.controls)
    }

    fn laser_reset(&mut self) -> Result<()> {
        self.state.apply_laser_reset(&self.basis);
        Ok(())
    }

    fn measure(&self, observable: &ObservableSpec) -> Result<f64> {
        measure_with(observable, self.n_sites(), self.center_site(), |p| {
            self.state.expectation(&self.basis, p)
        })
    }
}

// ---------------------------------------------------------------------------
// Dense backend
// ---------------------------------------------------------------------------

/// Schedule executor over a dense statevector or density matrix, with one
/// exact eigendecomposed propagator per Hamiltonian label.
pub struct DenseEngine {
    center: Option<usize>,
    props: Vec<EigenPropagator>,
    state: DenseState,
}

impl DenseEngine {
    /// Diagonalize each Hamiltonian once; `center` names the central-spin
    /// site if the system has one.
    pub fn build(
        initial: DenseState,
        hamiltonians: &[&HamiltonianTerms],
        center: Option<usize>,
    ) -> Result<Self> {
        if let Some(c) = center {
            if c >= initial.n_sites() {
                return Err(Error::invalid("center site out of range"));
            }
        }
        let mut props = Vec::with_capacity(hamiltonians.len());
        for h in hamiltonians {
            if h.n_sites() != initial.n_sites() {
                return Err(Error::invalid(format!(
                    "hamiltonian covers {} sites but the state covers {}",
                    h.n_sites(),
                    initial.n_sites()
                )));
            }
            props.push(EigenPropagator::from_terms(h)?);
        }
        Ok(Self {
            center,
            props,
            state: initial,
        })
    }

    pub fn state(&self) -> &DenseState {
        &self.state
    }

    pub fn set_state(&mut self, state: DenseState) -> Result<()> {
        if state.n_sites() != self.state.n_sites() {
            return Err(Error::invalid(
                "state site count does not match the engine",
            ));
        }
        self.state = state;
        Ok(())
    }
}

impl Engine for DenseEngine {
    fn n_sites(&self) -> usize {
        self.state.n_sites()
    }

    fn center_site(&self) -> Option<usize> {
        self.center
    }

    fn pulse(&mut self, sites: &[usize], axis: &PulseAxis, angle_rad: f64) -> Result<()> {
        for &s in sites {
            match axis {
                PulseAxis::Cartesian(a) => self.state.apply_rotation(s, *a, angle_rad),
                PulseAxis::Equatorial { phi_rad } => {
                    self.state.apply_rotation_about_phase(s, *phi_rad, angle_rad)
                }
            }
        }
        Ok(())
    }

    fn free(&mut self, hamiltonian: usize, duration_s: f64) -> Result<()> {
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::invalid("evolution time must be non-negative"));
        }
        let prop = self.props.get(hamiltonian).ok_or_else(|| {
            Error::invalid(format!(
                "schedule references hamiltonian {hamiltonian} but the engine holds {}",
                self.props.len()
            ))
        })?;
        prop.evolve(&mut self.state, duration_s);
        Ok(())
    }

    fn laser_reset(&mut self) -> Result<()> {
        let c = self.center.ok_or_else(|| {
            Error::invalid("laser reset requires a center spin but the engine has none")
        })?;
        self.state.laser_reset(c);
        Ok(())
    }

    fn measure(&self, observable: &ObservableSpec) -> Result<f64> {
        measure_with(observable, self.n_sites(), self.center_site(), |p| {
            Ok(self.state.expectation(p))
        })
    }
}

/// Shared observable evaluation over a backend's Pauli-expectation closure.
/// Nuclear observables are reported in spin-1/2 units (⟨I_α⟩ = ⟨σ_α⟩/2).
fn measure_with(
    observable: &ObservableSpec,
    n_sites: usize,
    center: Option<usize>,
    expect: impl Fn(&PauliProduct) -> Result<f64>,
) -> Result<f64> {
    match observable {
        ObservableSpec::CenterZ => {
            let c = center.ok_or_else(|| {
                Error::invalid("center-spin readout requested but the engine has no center")
            })?;
            expect(&PauliProduct::single(c, Axis::Z))
        }
        ObservableSpec::LayerMean(axis) => {
            let nuclei = nuclear_sites(n_sites, center);
            if nuclei.is_empty() {
                return Err(Error::invalid("layer average over an empty nuclear set"));
            }
            let mut sum = 0.0;
            for s in &nuclei {
                sum += expect(&PauliProduct::single(*s, *axis))?;
            }
            Ok(sum / (2.0 * nuclei.len() as f64))
        }
        ObservableSpec::LayerWeightedZ(weights) => {
            if weights.is_empty() {
                return Err(Error::invalid("weighted layer average needs sites"));
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for &(site, w) in weights {
                if site >= n_sites {
                    return Err(Error::invalid(format!(
                        "site {site} out of range for {n_sites}-site engine"
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::invalid("weights must be finite"));
                }
                num += w * expect(&PauliProduct::single(site, Axis::Z))?;
                den += w;
            }
            if den.abs() < 1e-300 {
                return Err(Error::invalid("weights sum to zero"));
            }
            Ok(num / (2.0 * den))
        }
        ObservableSpec::SiteZ(site) => {
            if *site >= n_sites {
                return Err(Error::invalid(format!(
                    "site {site} out of range for {n_sites}-site engine"
                )));
            }
            Ok(expect(&PauliProduct::single(*site, Axis::Z))? / 2.0)
        }
    }
}
