//! The truncated expectation-value engine.
//!
//! Instead of a wavefunction, the engine stores one real number per tracked
//! Pauli string — the string's expectation value — and propagates the whole
//! vector with a sparse precomputed action table. The tracked set keeps
//! every string of weight ≤ 2 plus all center-nuclear-nuclear triples (and
//! optional listed nuclear triples), which is what makes central-spin
//! problems with a hundred nuclei tractable: the state has ~1.8·10⁵ entries
//! where a wavefunction would need 2¹⁰¹.
//!
//! - [`basis`]: enumeration and indexing of the tracked string set.
//! - [`table`]: the sparse commutator action of a Hamiltonian on that set,
//!   with an on-disk cache format.
//! - [`state`]: the coefficient vector, Taylor stepping, pulses, reset.

pub mod basis;
pub mod state;
pub mod table;

pub use basis::{basis_size, enumerate_basis, TruncatedBasis, TruncationRule};
pub use state::{
    evolve, evolve_scaled, evolve_with_steps, step, steps_for, StepControls, TruncatedState,
    HARD_DT_LAMBDA_BOUND,
};
pub use table::{
    precompute_action, precompute_action_with_layout, ActionTable, TableLayout,
};
