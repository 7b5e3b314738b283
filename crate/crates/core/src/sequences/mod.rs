//! Pulse sequences and measurement protocols.
//!
//! The [`schedule`] module defines a declarative timeline of pulses, free
//! evolution, optical resets, and measurements; [`engine`] runs such a
//! timeline on either the truncated-basis integrator or the exact dense
//! reference, so every protocol here can be cross-validated between the two.
//! The remaining modules build and run the concrete protocols: dynamical
//! decoupling spectroscopy ([`axy`]), dressed-state polarization transfer
//! ([`novel`]), intra-layer coherence probes ([`layer`]), and driven
//! period-doubling cycles ([`dtc`]).

pub mod axy;
pub mod dtc;
pub mod engine;
pub mod layer;
pub mod novel;
pub mod schedule;

pub use axy::{
    axy_bracketed_schedule, axy_pulse_fractions, axy_pulse_offsets, axy_schedule, run_axy_point,
    run_axy_spectrum, AxyParams, F1_MAX,
};
pub use dtc::{run_dtc, run_dtc_dephased, DtcParams, DtcSystem};
pub use engine::{
    resolve_site_set, run_schedule, DenseEngine, Engine, EngineChoice, TruncatedEngine,
};
pub use layer::{
    run_hahn, run_ramsey, run_wahuha, LayerReadout, LayerSystem, LINE_NARROWING_DETUNING_SCALE,
};
pub use novel::{
    novel_readout, novel_schedule, run_novel, run_novel_with_hamiltonians, NovelCurves,
    NovelParams, NovelSign,
};
pub use schedule::{
    EventKind, ObservableSpec, PulseAxis, PulseSchedule, ScheduleBuilder, ScheduledEvent, SiteSet,
};
