//! The ideal (non-cryptographic) phase-estimation pipeline: GHZ
//! preparation, local phase encoding, parity readout, estimator inversion,
//! and precision benchmarks.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    measurement_statistics, sample_outcome, DensityOperator, C64, MAX_QUBITS,
};
use crate::pauli::PauliLetter;
use crate::rng::{stream_rng, SimRng};

/// Identical single-qubit phase encoding u = diag(1, e^{i theta}) applied to
/// every qubit.
#[derive(Copy, Clone, Debug)]
pub struct PhaseEncoding {
    pub theta: f64,
    pub n: usize,
}

impl PhaseEncoding {
    pub fn new(theta: f64, n: usize) -> Self {
        Self { theta, n }
    }

    pub fn single_qubit(&self) -> Matrix2<C64> {
        Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(self.theta.cos(), self.theta.sin()),
        )
    }

    /// u^(x)n as a dense matrix.
    pub fn unitary(&self) -> DMatrix<C64> {
        let u2 = self.single_qubit();
        let mut u = DMatrix::<C64>::identity(1, 1);
        for _ in 0..self.n {
            u = u.kronecker(&DMatrix::from_fn(2, 2, |r, c| u2[(r, c)]));
        }
        u
    }
}

/// Applies the local phase encoding: U rho U†.
pub fn encode(enc: &PhaseEncoding, rho: &DensityOperator) -> Result<DensityOperator> {
    if enc.n != rho.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: 1usize << enc.n,
            right: rho.dim(),
        });
    }
    rho.conjugated_by(&enc.unitary())
}

/// The n-qubit GHZ state (|0...0> + |1...1>)/sqrt(2) as a projector.
pub fn prepare_ghz(n: usize) -> Result<DensityOperator> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "GHZ size {n} outside 1..={MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::<C64>::zeros(dim);
    v[0] = C64::new(s, 0.0);
    v[dim - 1] = C64::new(s, 0.0);
    DensityOperator::from_pure(&v)
}

/// A tensor-product Pauli observable with +-1 outcomes, measured qubit by
/// qubit; the observable value of a readout is the product of the per-qubit
/// signs over the support.
#[derive(Clone, Debug)]
pub struct ObservableSpec {
    name: String,
    letters: Vec<PauliLetter>,
    /// Largest eigenvalue magnitude (1 for Pauli products).
    bound: f64,
}

impl ObservableSpec {
    /// The GHZ parity observable X^(x)n.
    pub fn parity_x(n: usize) -> Self {
        Self {
            name: format!("X^{n}"),
            letters: vec![PauliLetter::X; n],
            bound: 1.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn eigenvalue_bound(&self) -> f64 {
        self.bound
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        crate::pauli::PauliString::new(crate::pauli::Phase::PLUS_ONE, self.letters.clone())
            .matrix()
    }

    /// +-1 value of an outcome index: product of (-1)^bit over the
    /// non-identity letters.
    pub fn outcome_value(&self, outcome: usize) -> f64 {
        let m = self.letters.len();
        let mut v = 1.0;
        for (j, l) in self.letters.iter().enumerate() {
            if !l.is_identity() && (outcome >> (m - 1 - j)) & 1 == 1 {
                v = -v;
            }
        }
        v
    }

    /// Expected value curve theta -> <O> for the GHZ working point:
    /// cos(n theta) for the X-parity observable.
    pub fn ghz_expected_value(&self, theta: f64) -> f64 {
        (self.num_qubits() as f64 * theta).cos()
    }

    /// d<O>/d theta of the GHZ curve.
    pub fn ghz_derivative(&self, theta: f64) -> f64 {
        let n = self.num_qubits() as f64;
        -n * (n * theta).sin()
    }
}

/// One estimation run: the inverted estimate, the raw observable mean, the
/// error-propagation variance, and the signed deviation from the true value.
#[derive(Clone, Debug, Serialize)]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub o_hat: f64,
    pub variance: f64,
    pub nu: usize,
    pub bias: f64,
    pub seed: u64,
}

/// Maximum-likelihood estimate of <O>: the mean of +-1 outcomes.
pub fn estimate_observable(outcomes: &[f64]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot estimate from an empty outcome list".into(),
        ));
    }
    Ok(outcomes.iter().sum::<f64>() / outcomes.len() as f64)
}

/// Inverts the GHZ expectation curve <O> = cos(n theta): clamps the raw
/// estimate into [-1, 1], takes arccos, and selects the branch nearest the
/// prior working point.
pub fn invert_estimate(o_hat: f64, obs: &ObservableSpec, prior: f64) -> Result<f64> {
    let n = obs.num_qubits() as f64;
    let folded = (n * prior).rem_euclid(std::f64::consts::PI);
    let stationary_dist = folded.min(std::f64::consts::PI - folded);
    if stationary_dist < 1e-3 {
        return Err(Error::NonInvertibleWorkingPoint(prior));
    }
    let u = o_hat.clamp(-1.0, 1.0).acos();
    let tau = std::f64::consts::TAU;
    let k0 = (n * prior / tau).round() as i64;
    let mut best = f64::NAN;
    let mut best_dist = f64::INFINITY;
    for k in (k0 - 1)..=(k0 + 1) {
        for cand in [(u + tau * k as f64) / n, (-u + tau * k as f64) / n] {
            let d = (cand - prior).abs();
            if d < best_dist {
                best_dist = d;
                best = cand;
            }
        }
    }
    Ok(best)
}

/// Error propagation Delta^2 theta = (Tr(O^2 rho) - Tr(O rho)^2) / (nu d^2)
/// with d = d<O>/d theta at the working point.
pub fn error_propagation(
    obs: &ObservableSpec,
    rho_theta: &DensityOperator,
    nu: usize,
    dtheta_exp: f64,
) -> Result<f64> {
    if dtheta_exp == 0.0 {
        return Err(Error::InvalidArgument(
            "zero derivative: error propagation undefined".into(),
        ));
    }
    if nu == 0 {
        return Err(Error::InvalidArgument("nu must be positive".into()));
    }
    let o = obs.matrix();
    let o2 = &o * &o;
    let mean = rho_theta.expectation(&o)?.re;
    let second = rho_theta.expectation(&o2)?.re;
    Ok((second - mean * mean).max(0.0) / (nu as f64 * dtheta_exp * dtheta_exp))
}

/// Quantum Fisher information of a pure state under e^{-i theta G}:
/// 4 (<G^2> - <G>^2). Mixed inputs are rejected.
pub fn qfi_pure(state: &DensityOperator, generator: &DMatrix<C64>) -> Result<f64> {
    let purity = state.purity();
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "state is mixed (purity {purity}); mixed-state QFI is out of scope"
        )));
    }
    let g2 = generator * generator;
    let mean = state.expectation(generator)?.re;
    let second = state.expectation(&g2)?.re;
    Ok(4.0 * (second - mean * mean).max(0.0))
}

/// Runs the full ideal pipeline once: prepare GHZ_n, encode theta, measure
/// X^(x)n statistics, draw nu parity outcomes, estimate and invert.
///
/// The prior for inversion is the true theta (the usual local working-point
/// assumption), the error-propagation derivative is evaluated there, and
/// `bias` records theta_hat - theta.
pub fn run_ideal_experiment(
    n: usize,
    theta: f64,
    nu: usize,
    seed: u64,
) -> Result<EstimationResult> {
    let mut rng = stream_rng(seed, 0);
    run_ideal_with_rng(n, theta, nu, &mut rng, seed)
}

/// As [`run_ideal_experiment`] with an externally supplied stream.
pub fn run_ideal_with_rng(
    n: usize,
    theta: f64,
    nu: usize,
    rng: &mut SimRng,
    seed_label: u64,
) -> Result<EstimationResult> {
    if nu < 2 {
        return Err(Error::InvalidArgument(
            "at least two repetitions are required for a variance".into(),
        ));
    }
    let obs = ObservableSpec::parity_x(n);
    let rho_theta = encode(&PhaseEncoding::new(theta, n), &prepare_ghz(n)?)?;
    let stats = measurement_statistics(&rho_theta, obs.letters())?;
    let outcomes: Vec<f64> = (0..nu)
        .map(|_| obs.outcome_value(sample_outcome(&stats, rng)))
        .collect();
    let o_hat = estimate_observable(&outcomes)?;
    let theta_hat = invert_estimate(o_hat, &obs, theta)?;
    let sample_var =
        outcomes.iter().map(|m| (m - o_hat) * (m - o_hat)).sum::<f64>() / (nu as f64 - 1.0);
    let deriv = obs.ghz_derivative(theta);
    Ok(EstimationResult {
        theta_hat,
        o_hat,
        variance: sample_var / (nu as f64 * deriv * deriv),
        nu,
        bias: theta_hat - theta,
        seed: seed_label,
    })
}
