//! Delegated quantum metrology: simulators for Clifford-encrypted delegation
//! protocols and the numerical verification of their security bounds.

pub mod adversary;
pub mod error;
pub mod linalg;
pub mod metrology;
pub mod pauli;
pub mod protocols;
pub mod rng;

pub use adversary::{
    apply_attack, mixed_encoding_channel, substitute_state, AttackModel, AttackStage, TamperRule,
};
pub use error::{Error, Result};
pub use linalg::{
    apply_channel, classical_fidelity, fidelity, measurement_statistics, partial_replace,
    sample_outcome, trace_distance, DensityOperator, KrausChannel, MeasurementStatistics, C64,
};
pub use metrology::{
    encode, error_propagation, estimate_observable, invert_estimate, prepare_ghz, qfi_pure,
    run_ideal_experiment, EstimationResult, ObservableSpec, PhaseEncoding,
};
pub use pauli::{
    apply_permutation, clifford_table, conjugate, enumerate_paulis, ghz_stabilizer_group,
    s_q_closed_form, stabilizer_group_of, twirl_sum, uniform_clifford_image, LocalClifford,
    PauliLetter, PauliString, Phase, QubitPermutation, StabilizerGroup,
};
pub use protocols::{
    dm_decrypt_state, dm_encrypt, dm_prepare_input, dm_requested_measurement, DmInstance, DmKey,
    DsmInstance, DsmKey, DspInstance, DspKey, ProtocolInstance, ProtocolKey, ProtocolTranscript,
    RequestedBasis,
};
pub use rng::{master_rng, stream_rng, SimRng};
