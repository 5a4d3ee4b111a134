//! The delegated state-preparation protocol: Eve supplies N copies of a
//! requested stabilizer state; Alice keeps one uniformly chosen copy and
//! measures every other copy in a random stabilizer basis, accepting only
//! all-+1 outcomes. The kept copy then runs the local encode-and-measure
//! pipeline.

use rand::Rng;

use super::blocks::{
    accept_split, block_bits, encoding_unitary, enumerate_stab_assignments, measurement_letters,
    stabilizer_passes, verify_stabilized,
};
use super::{index_to_bits, ProtocolKey, ProtocolTranscript};
use crate::adversary::{substitute_state, AttackModel};
use crate::error::{Error, Result};
use crate::linalg::{measurement_statistics, sample_index, DensityOperator, MAX_QUBITS};
use crate::metrology::{
    encode, estimate_observable, invert_estimate, prepare_ghz, EstimationResult, ObservableSpec,
    PhaseEncoding,
};
use crate::pauli::{ghz_stabilizer_group, PauliLetter, PauliString, StabilizerGroup};
use crate::rng::SimRng;

/// DSP secret: which copy is kept, and the stabilizer drawn for every
/// tested copy.
#[derive(Clone, Debug)]
pub struct DspKey {
    pub kept_block: usize,
    pub stabilizers: Vec<(usize, PauliString)>,
}

/// A DSP configuration: N copies of an n-qubit stabilizer state (GHZ by
/// default) verified before local use.
#[derive(Clone, Debug)]
pub struct DspInstance {
    n: usize,
    copies: usize,
    theta: f64,
    obs: ObservableSpec,
    group: StabilizerGroup,
    block_state: DensityOperator,
    ideal_dist: Vec<f64>,
}

impl DspInstance {
    pub fn new(n: usize, copies: usize, theta: f64, obs: ObservableSpec) -> Result<Self> {
        let group = ghz_stabilizer_group(n)?;
        let block_state = prepare_ghz(n)?;
        Self::with_requested(n, copies, theta, obs, group, block_state)
    }

    pub fn with_requested(
        n: usize,
        copies: usize,
        theta: f64,
        obs: ObservableSpec,
        group: StabilizerGroup,
        block_state: DensityOperator,
    ) -> Result<Self> {
        if n < 1 || copies < 2 {
            return Err(Error::InvalidArgument(
                "DSP needs n >= 1 and at least two copies".into(),
            ));
        }
        if n * copies > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "N*n exceeds simulator cap {MAX_QUBITS}"
            )));
        }
        if obs.num_qubits() != n || group.num_qubits() != n || block_state.num_qubits() != n {
            return Err(Error::LengthMismatch {
                left: obs.num_qubits(),
                right: n,
            });
        }
        if group.generators().len() != n {
            return Err(Error::InvalidArgument(
                "requested state needs a full-rank stabilizer group".into(),
            ));
        }
        verify_stabilized(&block_state, &group)?;
        let encoded = encode(&PhaseEncoding::new(theta, n), &block_state)?;
        let ideal_dist = measurement_statistics(&encoded, obs.letters())?
            .probabilities()
            .to_vec();
        Ok(Self {
            n,
            copies,
            theta,
            obs,
            group,
            block_state,
            ideal_dist,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn observable(&self) -> &ObservableSpec {
        &self.obs
    }

    pub fn stabilizer_group(&self) -> &StabilizerGroup {
        &self.group
    }

    pub fn total_qubits(&self) -> usize {
        self.n * self.copies
    }

    /// delta = 1/N.
    pub fn analytic_bound(&self) -> f64 {
        1.0 / self.copies as f64
    }

    pub fn ideal_distribution(&self) -> &[f64] {
        &self.ideal_dist
    }

    pub fn honest_prime(&self) -> Result<DensityOperator> {
        let mut out = self.block_state.clone();
        for _ in 1..self.copies {
            out = out.tensor(&self.block_state)?;
        }
        Ok(out)
    }

    /// N * |S|^(N-1).
    pub fn key_space_size(&self) -> u128 {
        self.copies as u128 * (self.group.len() as u128).pow(self.copies as u32 - 1)
    }

    pub fn sample_key(&self, rng: &mut SimRng) -> DspKey {
        let kept = rng.random_range(0..self.copies);
        let stabilizers = (0..self.copies)
            .filter(|&j| j != kept)
            .map(|j| (j, self.group.random_element(rng).clone()))
            .collect();
        DspKey {
            kept_block: kept,
            stabilizers,
        }
    }

    /// The whole key space (kept block x stabilizer assignments).
    pub fn enumerate_keys(&self) -> Vec<DspKey> {
        (0..self.copies)
            .flat_map(|kept| {
                enumerate_stab_assignments(&self.group, self.copies, kept)
                    .into_iter()
                    .map(move |stabilizers| DspKey {
                        kept_block: kept,
                        stabilizers,
                    })
            })
            .collect()
    }

    /// Joint outcome distribution for one key: tested copies in their
    /// stabilizer letters (identity slots read in Z and ignored), the kept
    /// copy encoded and read in the observable basis.
    pub fn key_distribution(&self, rho_prime: &DensityOperator, key: &DspKey) -> Result<Vec<f64>> {
        if rho_prime.num_qubits() != self.total_qubits() {
            return Err(Error::DimensionMismatch {
                left: rho_prime.dim(),
                right: 1 << self.total_qubits(),
            });
        }
        let encoded = rho_prime.conjugated_by(&encoding_unitary(
            self.theta,
            self.n,
            self.copies,
            key.kept_block,
        ))?;
        let letters = measurement_letters(
            self.n,
            self.copies,
            &self.obs,
            key.kept_block,
            &key.stabilizers,
            |_| PauliLetter::Z,
        );
        Ok(measurement_statistics(&encoded, &letters)?
            .probabilities()
            .to_vec())
    }

    pub fn accept_split(&self, key: &DspKey, dist: &[f64]) -> (f64, Vec<f64>) {
        accept_split(self.n, self.copies, key.kept_block, &key.stabilizers, dist)
    }

    /// One protocol round. Only preparation-stage attacks apply: Alice
    /// performs the measurements herself.
    pub fn run(&self, prep: &AttackModel, rng: &mut SimRng) -> Result<ProtocolTranscript> {
        let rho_prime = substitute_state(prep, &self.honest_prime()?)?;
        let key = self.sample_key(rng);
        let dist = self.key_distribution(&rho_prime, &key)?;
        let outcome = sample_index(&dist, rng);
        let accepted = key
            .stabilizers
            .iter()
            .all(|(j, s)| stabilizer_passes(s, block_bits(outcome, *j, self.n, self.copies), self.n));
        let metrology_outcome = accepted.then(|| {
            self.obs
                .outcome_value(block_bits(outcome, key.kept_block, self.n, self.copies))
        });
        let bits = index_to_bits(outcome, self.total_qubits());
        Ok(ProtocolTranscript {
            accepted,
            raw_outcome: bits.clone(),
            decrypted_outcome: bits,
            metrology_outcome,
            key: ProtocolKey::Dsp(key),
            attack_label: prep.label(),
        })
    }

    pub fn run_estimation(
        &self,
        prep: &AttackModel,
        nu: usize,
        rng: &mut SimRng,
        seed_label: u64,
    ) -> Result<EstimationResult> {
        if nu < 2 {
            return Err(Error::InvalidArgument(
                "at least two accepted rounds are required".into(),
            ));
        }
        let max_attempts = nu.saturating_mul(50).max(1000);
        let mut outcomes = Vec::with_capacity(nu);
        let mut attempts = 0usize;
        while outcomes.len() < nu {
            if attempts >= max_attempts {
                return Err(Error::InvalidArgument(format!(
                    "accept rate too low: {} accepted in {attempts} rounds",
                    outcomes.len()
                )));
            }
            attempts += 1;
            if let Some(v) = self.run(prep, rng)?.metrology_outcome {
                outcomes.push(v);
            }
        }
        let o_hat = estimate_observable(&outcomes)?;
        let theta_hat = invert_estimate(o_hat, &self.obs, self.theta)?;
        let sample_var = outcomes
            .iter()
            .map(|v| (v - o_hat) * (v - o_hat))
            .sum::<f64>()
            / (nu as f64 - 1.0);
        let deriv = self.obs.ghz_derivative(self.theta);
        Ok(EstimationResult {
            theta_hat,
            o_hat,
            variance: sample_var / (nu as f64 * deriv * deriv),
            nu,
            bias: theta_hat - self.theta,
            seed: seed_label,
        })
    }
}
