//! Dense complex linear algebra for registers of up to five qubits.

mod bell;
mod metrics;
mod pauli;
mod state;
mod unitary;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 5;

pub use bell::{bell_branches, bell_measurement, bell_probabilities, BellBranch, BellIndex};
pub use metrics::{fidelity, infidelity, trace_distance};
pub use pauli::{measure_pauli, pauli_expectation, Pauli, PauliString};
pub use state::{
    bell_state, bloch_vector, from_bloch, ghz_state, prepare_named_state, random_pure_qubit,
    w_state, DensityMatrix, NamedState, STATE_TOL,
};
pub use unitary::{apply_unitary, rot_unitary, Unitary};

pub(crate) use pauli::{index_to_outcomes, outcome_distribution, sample_index};
pub(crate) use state::hermitian_eigen;
pub(crate) use unitary::apply_1q;
