//! Executable delegation protocols: delegated measurement (DM), delegated
//! state preparation (DSP), and delegated state preparation plus
//! measurement (DSM).
//!
//! Every protocol runs in two modes: sampled transcripts (one key, one
//! outcome draw) for empirical experiments, and exact conditional
//! statistics for the soundness and privacy evaluations.

mod blocks;
mod dm;
mod dsm;
mod dsp;

pub use dm::{
    dm_decrypt_state, dm_encrypt, dm_prepare_input, dm_requested_measurement, DmInstance, DmKey,
    RequestedBasis,
};
pub use dsm::{DsmInstance, DsmKey};
pub use dsp::{DspInstance, DspKey};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

/// The secret for one protocol round.
#[derive(Clone, Debug)]
pub enum ProtocolKey {
    Dm(DmKey),
    Dsm(DsmKey),
    Dsp(DspKey),
}

impl ProtocolKey {
    /// Short stable digest for transcript records.
    pub fn digest(&self) -> String {
        let mut hasher = DefaultHasher::new();
        match self {
            ProtocolKey::Dm(k) => format!("dm|{:?}|{}", k.flag_positions, k.clifford).hash(&mut hasher),
            ProtocolKey::Dsm(k) => format!(
                "dsm|{}|{}|{:?}",
                k.encoded_block,
                k.clifford,
                k.stabilizers
                    .iter()
                    .map(|(j, s)| format!("{j}:{s}"))
                    .collect::<Vec<_>>()
            )
            .hash(&mut hasher),
            ProtocolKey::Dsp(k) => format!(
                "dsp|{}|{:?}",
                k.kept_block,
                k.stabilizers
                    .iter()
                    .map(|(j, s)| format!("{j}:{s}"))
                    .collect::<Vec<_>>()
            )
            .hash(&mut hasher),
        }
        format!("{:016x}", hasher.finish())
    }
}

/// Everything one protocol round produced. The metrology outcome is
/// present exactly when the round was accepted.
#[derive(Clone, Debug)]
pub struct ProtocolTranscript {
    pub accepted: bool,
    /// Bits as reported by the untrusted party (encrypted frame).
    pub raw_outcome: Vec<u8>,
    /// Bits after classical post-processing (ideal frame).
    pub decrypted_outcome: Vec<u8>,
    /// +-1 observable value of the metrology block, if accepted.
    pub metrology_outcome: Option<f64>,
    pub key: ProtocolKey,
    pub attack_label: String,
}

impl ProtocolTranscript {
    pub fn raw_bitstring(&self) -> String {
        self.raw_outcome.iter().map(|b| char::from(b'0' + b)).collect()
    }

    pub fn decrypted_bitstring(&self) -> String {
        self.decrypted_outcome
            .iter()
            .map(|b| char::from(b'0' + b))
            .collect()
    }
}

pub(crate) fn index_to_bits(index: usize, m: usize) -> Vec<u8> {
    (0..m).map(|j| ((index >> (m - 1 - j)) & 1) as u8).collect()
}

/// A protocol configured for exact evaluation, as handed to the analysis
/// layer.
#[derive(Clone, Debug)]
pub enum ProtocolInstance {
    Dm(DmInstance),
    Dsm(DsmInstance),
    Dsp(DspInstance),
}

impl ProtocolInstance {
    /// The analytic soundness bound: 3n/2t for DM, 1/N otherwise.
    pub fn analytic_bound(&self) -> f64 {
        match self {
            ProtocolInstance::Dm(i) => i.analytic_bound(),
            ProtocolInstance::Dsm(i) => i.analytic_bound(),
            ProtocolInstance::Dsp(i) => i.analytic_bound(),
        }
    }

    /// Number of qubits a channel attack acts on.
    pub fn attacked_qubits(&self) -> usize {
        match self {
            ProtocolInstance::Dm(i) => i.total_qubits(),
            ProtocolInstance::Dsm(i) => i.total_qubits(),
            ProtocolInstance::Dsp(i) => i.total_qubits(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProtocolInstance::Dm(_) => "dm",
            ProtocolInstance::Dsm(_) => "dsm",
            ProtocolInstance::Dsp(_) => "dsp",
        }
    }
}
