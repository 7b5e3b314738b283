//! Declarative pulse schedules.
//!
//! A [`PulseSchedule`] is an ordered list of timed events — instantaneous
//! pulses, free-evolution segments under a labeled Hamiltonian, optical
//! resets of the center spin, and measurement requests.  Schedules are built
//! through [`ScheduleBuilder`], which keeps a running time cursor and
//! validates that event offsets never decrease.
//!
//! Schedules are engine-agnostic: the same schedule can be executed by the
//! truncated-operator engine or by a dense statevector/density engine (see
//! [`super::engine`]), which is how cross-engine agreement checks are run.

use crate::error::{Error, Result};
use crate::pauli::Axis;

/// Rotation axis of a pulse: a Cartesian axis, or an axis in the equatorial
/// (x–y) plane at azimuth `phi_rad` measured from +x toward +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseAxis {
    Cartesian(Axis),
    Equatorial { phi_rad: f64 },
}

/// Which spins an event addresses.  Index 0 is the central electronic spin
/// when the engine has one; nuclear sites follow.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteSet {
    /// The central (electronic) spin only.
    Center,
    /// Every nuclear site.
    Nuclei,
    /// All sites, center included when present.
    All,
    /// An explicit list of site indices.
    Listed(Vec<usize>),
}

/// What a measurement event records.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    /// ⟨σ_z⟩ of the central spin, in [−1, 1].
    CenterZ,
    /// Mean nuclear ⟨I_α⟩ = mean(⟨σ_α⟩)/2 over all nuclear sites, in [−1/2, 1/2].
    LayerMean(Axis),
    /// Weighted mean nuclear ⟨I_z⟩ over the listed `(site, weight)` pairs,
    /// normalized by the sum of weights.
    LayerWeightedZ(Vec<(usize, f64)>),
    /// ⟨I_z⟩ = ⟨σ_z⟩/2 of one site.
    SiteZ(usize),
}

/// One schedule event, without its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Instantaneous rotation of every listed site by `angle_rad` about `axis`.
    Pulse {
        sites: SiteSet,
        axis: PulseAxis,
        angle_rad: f64,
    },
    /// Free evolution for `duration_s` under the engine Hamiltonian labeled
    /// by index `hamiltonian` (engines hold one or more generators, e.g. a
    /// bare Hamiltonian and a spin-locked variant).
    Free { duration_s: f64, hamiltonian: usize },
    /// Optical reset of the central spin to its polarized state; nuclear
    /// coherences not involving the center are untouched.
    LaserReset,
    /// Record one observable value.
    Measure(ObservableSpec),
}

/// An event stamped with its offset from the schedule start.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    pub at_s: f64,
    pub kind: EventKind,
}

/// An ordered, validated event list.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    events: Vec<ScheduledEvent>,
    total_duration_s: f64,
}

impl PulseSchedule {
    pub fn events(&self) -> &[ScheduledEvent] {
        &self.events
    }

    /// Total free-evolution time in the schedule (pulses are instantaneous).
    pub fn total_duration_s(&self) -> f64 {
        self.total_duration_s
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    /// Number of `Measure` events — the length of the value vector a run
    /// produces.
    pub fn n_measurements(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Measure(_)))
            .count()
    }

    /// Largest Hamiltonian label any `Free` event references, if there is one.
    pub fn max_hamiltonian_index(&self) -> Option<usize> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Free { hamiltonian, .. } => Some(hamiltonian),
                _ => None,
            })
            .max()
    }

    /// Append another schedule, shifting its offsets to start where this one
    /// ends.
    pub fn then(mut self, other: &PulseSchedule) -> PulseSchedule {
        let shift = self.total_duration_s;
        for e in other.events() {
            self.events.push(ScheduledEvent {
                at_s: e.at_s + shift,
                kind: e.kind.clone(),
            });
        }
        self.total_duration_s += other.total_duration_s;
        self
    }
}

/// Builder with a running time cursor.  Instantaneous events land at the
/// cursor; `free` advances it.
#[derive(Debug, Clone, Default)]
pub struct ScheduleBuilder {
    events: Vec<ScheduledEvent>,
    cursor_s: f64,
}

impl ScheduleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cursor_s(&self) -> f64 {
        self.cursor_s
    }

    /// Instantaneous rotation about a Cartesian axis.
    pub fn pulse(mut self, sites: SiteSet, axis: Axis, angle_rad: f64) -> Self {
        self.events.push(ScheduledEvent {
            at_s: self.cursor_s,
            kind: EventKind::Pulse {
                sites,
                axis: PulseAxis::Cartesian(axis),
                angle_rad,
            },
        });
        self
    }

    /// Instantaneous rotation about the equatorial axis at azimuth `phi_rad`.
    pub fn pulse_phase(mut self, sites: SiteSet, phi_rad: f64, angle_rad: f64) -> Self {
        self.events.push(ScheduledEvent {
            at_s: self.cursor_s,
            kind: EventKind::Pulse {
                sites,
                axis: PulseAxis::Equatorial { phi_rad },
                angle_rad,
            },
        });
        self
    }

    /// Free evolution under Hamiltonian label 0.
    pub fn free(self, duration_s: f64) -> Result<Self> {
        self.free_with(duration_s, 0)
    }

    /// Free evolution under the Hamiltonian with the given label.
    pub fn free_with(mut self, duration_s: f64, hamiltonian: usize) -> Result<Self> {
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::invalid(format!(
                "free-evolution duration must be finite and nonnegative, got {duration_s}"
            )));
        }
        self.events.push(ScheduledEvent {
            at_s: self.cursor_s,
            kind: EventKind::Free {
                duration_s,
                hamiltonian,
            },
        });
        self.cursor_s += duration_s;
        Ok(self)
    }

    pub fn laser_reset(mut self) -> Self {
        self.events.push(ScheduledEvent {
            at_s: self.cursor_s,
            kind: EventKind::LaserReset,
        });
        self
    }

    pub fn measure(mut self, observable: ObservableSpec) -> Self {
        self.events.push(ScheduledEvent {
            at_s: self.cursor_s,
            kind: EventKind::Measure(observable),
        });
        self
    }

    pub fn build(self) -> Result<PulseSchedule> {
        let mut last = 0.0_f64;
        for (i, e) in self.events.iter().enumerate() {
            if !e.at_s.is_finite() || e.at_s < 0.0 {
                return Err(Error::invalid(format!(
                    "event {i} has invalid offset {}",
                    e.at_s
                )));
            }
            if e.at_s < last {
                return Err(Error::invalid(format!(
                    "event offsets must be nondecreasing: event {i} at {} follows {}",
                    e.at_s, last
                )));
            }
            if let EventKind::Pulse { angle_rad, .. } = e.kind {
                if !angle_rad.is_finite() {
                    return Err(Error::invalid("pulse angle must be finite"));
                }
            }
            last = e.at_s;
        }
        Ok(PulseSchedule {
            events: self.events,
            total_duration_s: self.cursor_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_tracks_cursor_and_duration() {
        let s = ScheduleBuilder::new()
            .pulse(SiteSet::Center, Axis::Y, std::f64::consts::FRAC_PI_2)
            .free(1e-6)
            .unwrap()
            .pulse(SiteSet::Center, Axis::X, std::f64::consts::PI)
            .free(2e-6)
            .unwrap()
            .measure(ObservableSpec::CenterZ)
            .build()
            .unwrap();
        assert_eq!(s.n_events(), 5);
        assert_eq!(s.n_measurements(), 1);
        assert!((s.total_duration_s() - 3e-6).abs() < 1e-18);
        let offsets: Vec<f64> = s.events().iter().map(|e| e.at_s).collect();
        assert_eq!(offsets, vec![0.0, 0.0, 1e-6, 1e-6, 3e-6]);
    }

    #[test]
    fn negative_duration_rejected() {
        assert!(ScheduleBuilder::new().free(-1e-9).is_err());
    }

    #[test]
    fn concatenation_shifts_offsets() {
        let a = ScheduleBuilder::new().free(1e-6).unwrap().build().unwrap();
        let b = ScheduleBuilder::new()
            .pulse(SiteSet::Nuclei, Axis::Z, 0.1)
            .free(1e-6)
            .unwrap()
            .build()
            .unwrap();
        let c = a.then(&b);
        assert_eq!(c.n_events(), 3);
        assert!((c.events()[1].at_s - 1e-6).abs() < 1e-18);
        assert!((c.total_duration_s() - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn max_hamiltonian_label() {
        let s = ScheduleBuilder::new()
            .free_with(1e-6, 0)
            .unwrap()
            .free_with(1e-6, 3)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(s.max_hamiltonian_index(), Some(3));
    }
}
