//! The delegated prep-and-measurement protocol: Eve supplies N blocks, a
//! random block is phase-encoded and every block is hidden behind a local
//! Clifford; the untested blocks are verified against random stabilizers
//! of the requested state.

use rand::Rng;

use super::blocks::{
    accept_split, block_bits, encoding_unitary, enumerate_stab_assignments, measurement_letters,
    stabilizer_passes, verify_stabilized,
};
use super::{index_to_bits, ProtocolKey, ProtocolTranscript};
use crate::adversary::{apply_attack, substitute_state, AttackModel};
use crate::error::{Error, Result};
use crate::linalg::{measurement_statistics, sample_index, DensityOperator, MAX_QUBITS};
use crate::metrology::{
    encode, estimate_observable, invert_estimate, prepare_ghz, EstimationResult, ObservableSpec,
    PhaseEncoding,
};
use crate::pauli::{ghz_stabilizer_group, LocalClifford, PauliLetter, PauliString, StabilizerGroup};
use crate::rng::SimRng;

/// DSM secret: (encoded block, Clifford on all Nn qubits, one stabilizer
/// per tested block).
#[derive(Clone, Debug)]
pub struct DsmKey {
    pub encoded_block: usize,
    pub clifford: LocalClifford,
    pub stabilizers: Vec<(usize, PauliString)>,
}

/// A DSM configuration: N copies of an n-qubit stabilizer state (GHZ by
/// default), working point theta, and the block readout observable.
#[derive(Clone, Debug)]
pub struct DsmInstance {
    n: usize,
    copies: usize,
    theta: f64,
    obs: ObservableSpec,
    group: StabilizerGroup,
    block_state: DensityOperator,
    ideal_dist: Vec<f64>,
}

impl DsmInstance {
    pub fn new(n: usize, copies: usize, theta: f64, obs: ObservableSpec) -> Result<Self> {
        let group = ghz_stabilizer_group(n)?;
        let block_state = prepare_ghz(n)?;
        Self::with_requested(n, copies, theta, obs, group, block_state)
    }

    /// Any stabilizer state can be requested; the state must actually be
    /// stabilized by the supplied group.
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
                "DSM needs n >= 1 and at least two copies".into(),
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

    pub fn requested_block(&self) -> &DensityOperator {
        &self.block_state
    }

    pub fn total_qubits(&self) -> usize {
        self.n * self.copies
    }

    /// delta = 1/N.
    pub fn analytic_bound(&self) -> f64 {
        1.0 / self.copies as f64
    }

    /// Ideal metrology statistics of one encoded block.
    pub fn ideal_distribution(&self) -> &[f64] {
        &self.ideal_dist
    }

    /// The honest preparation: requested_block^(x)N.
    pub fn honest_prime(&self) -> Result<DensityOperator> {
        let mut out = self.block_state.clone();
        for _ in 1..self.copies {
            out = out.tensor(&self.block_state)?;
        }
        Ok(out)
    }

    /// N * 24^(Nn) * |S|^(N-1).
    pub fn key_space_size(&self) -> u128 {
        self.copies as u128
            * 24u128.pow(self.total_qubits() as u32)
            * (self.group.len() as u128).pow(self.copies as u32 - 1)
    }

    pub fn sample_key(&self, rng: &mut SimRng) -> DsmKey {
        let l = rng.random_range(0..self.copies);
        let stabilizers = (0..self.copies)
            .filter(|&j| j != l)
            .map(|j| (j, self.group.random_element(rng).clone()))
            .collect();
        DsmKey {
            encoded_block: l,
            clifford: LocalClifford::random(self.total_qubits(), rng),
            stabilizers,
        }
    }

    /// All (l, stabilizer) choices; the Clifford part is reduced
    /// separately by the analysis layer.
    pub fn enumerate_stab_keys(&self) -> Vec<(usize, Vec<(usize, PauliString)>)> {
        (0..self.copies)
            .flat_map(|l| {
                enumerate_stab_assignments(&self.group, self.copies, l)
                    .into_iter()
                    .map(move |stabs| (l, stabs))
            })
            .collect()
    }

    /// Ideal-frame measurement letters for a key class, identity
    /// positions filled with Z (outcomes there are marginalized out).
    pub fn ideal_letters(&self, l: usize, stabs: &[(usize, PauliString)]) -> Vec<PauliLetter> {
        measurement_letters(self.n, self.copies, &self.obs, l, stabs, |_| PauliLetter::Z)
    }

    /// Statistics of U^(l) rho' U^(l)† in the ideal-frame letters.
    pub fn base_distribution(
        &self,
        rho_prime: &DensityOperator,
        l: usize,
        stabs: &[(usize, PauliString)],
    ) -> Result<Vec<f64>> {
        let encoded = self.encode_block(rho_prime, l)?;
        let letters = self.ideal_letters(l, stabs);
        Ok(measurement_statistics(&encoded, &letters)?
            .probabilities()
            .to_vec())
    }

    pub fn encode_block(&self, rho_prime: &DensityOperator, l: usize) -> Result<DensityOperator> {
        if rho_prime.num_qubits() != self.total_qubits() {
            return Err(Error::DimensionMismatch {
                left: rho_prime.dim(),
                right: 1 << self.total_qubits(),
            });
        }
        rho_prime.conjugated_by(&encoding_unitary(self.theta, self.n, self.copies, l))
    }

    /// Accept probability and conditional block-l readout distribution.
    pub fn accept_split(
        &self,
        l: usize,
        stabs: &[(usize, PauliString)],
        dist: &[f64],
    ) -> (f64, Vec<f64>) {
        accept_split(self.n, self.copies, l, stabs, dist)
    }

    /// The support positions whose outcomes matter for acceptance or
    /// metrology under a key class: all of block l plus the non-identity
    /// stabilizer positions of the tested blocks.
    pub fn relevant_positions(&self, l: usize, stabs: &[(usize, PauliString)]) -> Vec<bool> {
        let mut relevant = vec![false; self.total_qubits()];
        for q in 0..self.n {
            relevant[l * self.n + q] = true;
        }
        for (j, s) in stabs {
            for q in s.support() {
                relevant[j * self.n + q] = true;
            }
        }
        relevant
    }

    /// Exact ideal-frame distribution for a full key under a channel- or
    /// reporting-stage attack (dense-matrix path). `fills` supplies the
    /// requested letters at identity positions.
    pub fn decrypted_distribution(
        &self,
        key: &DsmKey,
        rho_prime: &DensityOperator,
        channel: &AttackModel,
        fills: &[PauliLetter],
    ) -> Result<Vec<f64>> {
        let m = self.total_qubits();
        if fills.len() != m {
            return Err(Error::LengthMismatch {
                left: fills.len(),
                right: m,
            });
        }
        let letters = measurement_letters(
            self.n,
            self.copies,
            &self.obs,
            key.encoded_block,
            &key.stabilizers,
            |q| fills[q],
        );
        if let AttackModel::OutcomeTamper(rule) = channel {
            let base = measurement_statistics(&self.encode_block(rho_prime, key.encoded_block)?, &letters)?;
            let mut mask = 0usize;
            for &p in rule.flips() {
                if p >= m {
                    return Err(Error::IndexOutOfRange {
                        index: p,
                        num_qubits: m,
                    });
                }
                mask |= 1 << (m - 1 - p);
            }
            let probs = base.probabilities();
            return Ok((0..probs.len()).map(|b| probs[b ^ mask]).collect());
        }
        let encoded = self.encode_block(rho_prime, key.encoded_block)?;
        let encrypted = encoded.conjugated_by(&key.clifford.matrix())?;
        let attacked = apply_attack(channel, &encrypted)?;
        let mut requested = Vec::with_capacity(m);
        let mut sign_mask = 0usize;
        for (q, &l) in letters.iter().enumerate() {
            let image = key.clifford.image_at(q, l);
            requested.push(image.letter);
            if image.sign < 0 {
                sign_mask |= 1 << (m - 1 - q);
            }
        }
        let stats = measurement_statistics(&attacked, &requested)?;
        let probs = stats.probabilities();
        Ok((0..probs.len()).map(|b| probs[b ^ sign_mask]).collect())
    }

    /// One protocol round: a preparation-stage attack supplies rho', a
    /// channel- or reporting-stage attack acts on the encrypted state.
    pub fn run(
        &self,
        prep: &AttackModel,
        channel: &AttackModel,
        rng: &mut SimRng,
    ) -> Result<ProtocolTranscript> {
        let rho_prime = substitute_state(prep, &self.honest_prime()?)?;
        let key = self.sample_key(rng);
        let mut transcript = self.run_with_key(key, &rho_prime, channel, rng)?;
        transcript.attack_label = format!("prep={};channel={}", prep.label(), channel.label());
        Ok(transcript)
    }

    pub fn run_with_key(
        &self,
        key: DsmKey,
        rho_prime: &DensityOperator,
        channel: &AttackModel,
        rng: &mut SimRng,
    ) -> Result<ProtocolTranscript> {
        if matches!(channel, AttackModel::StateSubstitution(_)) {
            return Err(Error::AttackScope(
                "state substitution acts at preparation, not in transit".into(),
            ));
        }
        let m = self.total_qubits();
        // requested letters at identity positions of tested stabilizers are
        // drawn uniformly so Eve cannot tell tested from encoded blocks
        let fills: Vec<PauliLetter> = (0..m)
            .map(|_| PauliLetter::NON_IDENTITY[rng.random_range(0..3)])
            .collect();
        let dist = self.decrypted_distribution(&key, rho_prime, channel, &fills)?;
        let decrypted = sample_index(&dist, rng);

        // reported record: re-encrypt the decrypted bits with the key signs
        let letters = measurement_letters(
            self.n,
            self.copies,
            &self.obs,
            key.encoded_block,
            &key.stabilizers,
            |q| fills[q],
        );
        let mut sign_mask = 0usize;
        for (q, &l) in letters.iter().enumerate() {
            if key.clifford.image_at(q, l).sign < 0 {
                sign_mask |= 1 << (m - 1 - q);
            }
        }
        // For reporting-stage tampering the decrypted distribution already
        // carries the flips, so Eve's reported record is still the
        // sign-encrypted image of what Alice decrypts.
        let raw = decrypted ^ sign_mask;

        let accepted = key
            .stabilizers
            .iter()
            .all(|(j, s)| stabilizer_passes(s, block_bits(decrypted, *j, self.n, self.copies), self.n));
        let metrology_outcome = accepted.then(|| {
            self.obs
                .outcome_value(block_bits(decrypted, key.encoded_block, self.n, self.copies))
        });
        Ok(ProtocolTranscript {
            accepted,
            raw_outcome: index_to_bits(raw, m),
            decrypted_outcome: index_to_bits(decrypted, m),
            metrology_outcome,
            key: ProtocolKey::Dsm(key),
            attack_label: channel.label(),
        })
    }

    /// Collects nu accepted rounds and estimates theta from the block
    /// readouts.
    pub fn run_estimation(
        &self,
        prep: &AttackModel,
        channel: &AttackModel,
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
            if let Some(v) = self.run(prep, channel, rng)?.metrology_outcome {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn instance(n: usize, copies: usize) -> DsmInstance {
        DsmInstance::new(n, copies, 0.3, ObservableSpec::parity_x(n)).unwrap()
    }

    #[test]
    fn honest_runs_always_accept_and_match_ideal() {
        let inst = instance(2, 2);
        let mut rng = stream_rng(51, 0);
        let mut plus = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            let tr = inst.run(&AttackModel::Honest, &AttackModel::Honest, &mut rng).unwrap();
            assert!(tr.accepted);
            if tr.metrology_outcome.unwrap() > 0.0 {
                plus += 1;
            }
        }
        let expect = (1.0 + (0.6f64).cos()) / 2.0;
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((plus as f64 / trials as f64 - expect).abs() < 4.0 * sigma);
    }

    #[test]
    fn identity_positions_do_not_affect_conditioning() {
        // ZZI-type stabilizer at n=3: the filled third qubit is requested in
        // an arbitrary basis and its outcome is marginalized out.
        let inst = instance(3, 2);
        let rho = inst.honest_prime().unwrap();
        let zzi: PauliString = "ZZI".parse().unwrap();
        let stabs = vec![(1usize, zzi)];
        let dist_z = inst.base_distribution(&rho, 0, &stabs).unwrap();
        // same statistics but fill with X instead of Z on the identity slot
        let letters_x = measurement_letters(3, 2, &inst.obs, 0, &stabs, |_| PauliLetter::X);
        let encoded = inst.encode_block(&rho, 0).unwrap();
        let dist_x = measurement_statistics(&encoded, &letters_x)
            .unwrap()
            .probabilities()
            .to_vec();
        let (p_z, cond_z) = inst.accept_split(0, &stabs, &dist_z);
        let (p_x, cond_x) = inst.accept_split(0, &stabs, &dist_x);
        assert_abs_diff_eq!(p_z, p_x, epsilon = 1e-12);
        for (a, b) in cond_z.iter().zip(&cond_x) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn decryption_matches_base_distribution_for_honest_channel() {
        let inst = instance(1, 2);
        let rho = inst.honest_prime().unwrap();
        let mut rng = stream_rng(52, 0);
        for _ in 0..10 {
            let key = inst.sample_key(&mut rng);
            let fills = vec![PauliLetter::Z; 2];
            let dist = inst
                .decrypted_distribution(&key, &rho, &AttackModel::Honest, &fills)
                .unwrap();
            let base = inst
                .base_distribution(&rho, key.encoded_block, &key.stabilizers)
                .unwrap();
            for (a, b) in dist.iter().zip(&base) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn substituted_all_zero_state_is_sometimes_rejected() {
        let inst = instance(2, 2);
        let zeros = DensityOperator::basis_state(4, 0).unwrap();
        let prep = AttackModel::StateSubstitution(zeros);
        let mut rng = stream_rng(53, 0);
        let mut rejects = 0;
        for _ in 0..400 {
            if !inst.run(&prep, &AttackModel::Honest, &mut rng).unwrap().accepted {
                rejects += 1;
            }
        }
        assert!(rejects > 0, "all-zero substitution must trip stabilizer tests");
    }

    #[test]
    fn channel_scope_is_enforced() {
        let inst = instance(1, 2);
        let sub = AttackModel::StateSubstitution(inst.honest_prime().unwrap());
        let mut rng = stream_rng(54, 0);
        assert!(inst.run(&AttackModel::Honest, &sub, &mut rng).is_err());
        // and a channel attack cannot stand in for preparation
        assert!(inst
            .run(&AttackModel::FixedPauli("XI".parse().unwrap()), &AttackModel::Honest, &mut rng)
            .is_err());
    }

    #[test]
    fn key_space_size_small_case() {
        let inst = instance(1, 2);
        // N * 24^2 * |S|^(N-1) = 2 * 576 * 2
        assert_eq!(inst.key_space_size(), 2304);
        assert_eq!(inst.enumerate_stab_keys().len(), 4); // N * |S|^(N-1)
    }

    #[test]
    fn runs_are_deterministic_under_seed() {
        let inst = instance(2, 2);
        let attack = AttackModel::FixedPauli("XIZI".parse().unwrap());
        let a: Vec<String> = {
            let mut rng = stream_rng(55, 1);
            (0..10)
                .map(|_| {
                    inst.run(&AttackModel::Honest, &attack, &mut rng)
                        .unwrap()
                        .decrypted_bitstring()
                })
                .collect()
        };
        let b: Vec<String> = {
            let mut rng = stream_rng(55, 1);
            (0..10)
                .map(|_| {
                    inst.run(&AttackModel::Honest, &attack, &mut rng)
                        .unwrap()
                        .decrypted_bitstring()
                })
                .collect()
        };
        assert_eq!(a, b);
    }
}
