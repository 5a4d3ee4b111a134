//! Dense complex linear algebra over multi-qubit Hilbert spaces: density
//! operators, Kraus channels, distances, and product-Pauli measurement
//! statistics.
//!
//! Everything is simulated with dense `2^m x 2^m` complex matrices. The qubit
//! count is capped at [`MAX_QUBITS`]; qubit 0 is the most significant bit of
//! a computational-basis index.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliLetter;

pub type C64 = Complex<f64>;

/// Hard cap on simulated qubits (4096-dimensional Hilbert space).
pub const MAX_QUBITS: usize = 12;

/// Tolerance for trace and Hermiticity checks.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Eigenvalues above this floor count as nonnegative.
pub const PSD_FLOOR: f64 = -1e-9;

/// Largest dimension at which construction runs the O(d^3) PSD eigencheck.
/// Above this, trace/Hermiticity are still enforced and positivity follows
/// from the construction paths (conjugations, channels, convex mixtures).
const PSD_CHECK_MAX_DIM: usize = 256;

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; one value per call is plenty here.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn check_square_pow2(mat: &DMatrix<C64>) -> Result<usize> {
    let d = mat.nrows();
    if mat.ncols() != d {
        return Err(Error::NotSquare(d, mat.ncols()));
    }
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(d));
    }
    let m = d.trailing_zeros() as usize;
    if m > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "{m} qubits exceeds simulator cap {MAX_QUBITS}"
        )));
    }
    Ok(m)
}

fn hermiticity_deviation(mat: &DMatrix<C64>) -> f64 {
    let d = mat.nrows();
    let mut max = 0.0f64;
    for i in 0..d {
        for j in i..d {
            let dev = (mat[(i, j)] - mat[(j, i)].conj()).norm();
            if dev > max {
                max = dev;
            }
        }
    }
    max
}

/// Largest elementwise modulus of a complex matrix.
pub fn max_abs(mat: &DMatrix<C64>) -> f64 {
    mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(mat: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = mat
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// A (validated) density operator on `num_qubits` qubits.
///
/// Invariants enforced at construction: unit trace and Hermiticity within
/// [`VALIDATION_TOL`], eigenvalues above [`PSD_FLOOR`] (eigencheck up to
/// dimension 256; see module notes).
#[derive(Clone, Debug)]
pub struct DensityOperator {
    data: DMatrix<C64>,
    num_qubits: usize,
}

impl DensityOperator {
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        let num_qubits = check_square_pow2(&data)?;
        let trace = data.trace();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(Error::InvalidTrace(trace.re));
        }
        let herm = hermiticity_deviation(&data);
        if herm > VALIDATION_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let op = Self { data, num_qubits };
        if op.dim() <= PSD_CHECK_MAX_DIM {
            let min = hermitian_eigenvalues(&op.data)[0];
            if min < PSD_FLOOR {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(op)
    }

    /// Wraps a matrix that is Hermitian/PSD by construction, after
    /// symmetrizing away floating-point skew. Trace is still checked.
    pub(crate) fn from_hermitian_unchecked(mut data: DMatrix<C64>) -> Result<Self> {
        let num_qubits = check_square_pow2(&data)?;
        let adj = data.adjoint();
        data = (data + adj) * C64::new(0.5, 0.0);
        let trace = data.trace();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(Error::InvalidTrace(trace.re));
        }
        Ok(Self { data, num_qubits })
    }

    pub fn from_pure(state: &DVector<C64>) -> Result<Self> {
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        let proj = state * state.adjoint();
        Self::new(proj)
    }

    /// |b><b| for a computational-basis index.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                index,
                num_qubits,
            });
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::from_pure(&v)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let data = DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Self { data, num_qubits }
    }

    /// Full-rank random state via G G† / Tr(G G†) with complex-Gaussian G.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << num_qubits;
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(standard_normal(rng), standard_normal(rng))
        });
        let mut h = &g * g.adjoint();
        let tr = h.trace().re;
        h /= C64::new(tr, 0.0);
        Self::from_hermitian_unchecked(h).expect("Gram matrix is a valid state")
    }

    /// Haar-ish random pure state (Gaussian vector, normalized).
    pub fn random_pure<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << num_qubits;
        let mut v = DVector::from_fn(dim, |_, _| {
            C64::new(standard_normal(rng), standard_normal(rng))
        });
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        Self::from_pure(&v).expect("normalized vector")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// Tr(O rho).
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: op.nrows(),
                right: self.dim(),
            });
        }
        Ok((op * &self.data).trace())
    }

    /// U rho U† for a unitary U.
    pub fn conjugated_by(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: u.nrows(),
                right: self.dim(),
            });
        }
        Self::from_hermitian_unchecked(u * &self.data * u.adjoint())
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.num_qubits + other.num_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "tensor product exceeds simulator cap {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            data: self.data.kronecker(&other.data),
            num_qubits: self.num_qubits + other.num_qubits,
        })
    }

    /// Max-abs elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.data - &other.data))
    }

    /// Full invariant check (trace, Hermiticity, PSD) regardless of size.
    pub fn validate_full(&self) -> Result<()> {
        let trace = self.data.trace();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(Error::InvalidTrace(trace.re));
        }
        let herm = hermiticity_deviation(&self.data);
        if herm > VALIDATION_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let min = hermitian_eigenvalues(&self.data)[0];
        if min < PSD_FLOOR {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }
}

/// A CPTP map given by Kraus operators. Completeness `sum A† A = I` is
/// checked at construction, not at application.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    operators: Vec<DMatrix<C64>>,
    num_qubits: usize,
}

impl KrausChannel {
    pub fn new(operators: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let num_qubits = check_square_pow2(first)?;
        let dim = first.nrows();
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for op in &operators {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    left: op.nrows(),
                    right: dim,
                });
            }
            sum += op.adjoint() * op;
        }
        let dev = max_abs(&(&sum - DMatrix::<C64>::identity(dim, dim)));
        if dev > VALIDATION_TOL {
            return Err(Error::CompletenessViolation(dev));
        }
        Ok(Self {
            operators,
            num_qubits,
        })
    }

    pub fn operators(&self) -> &[DMatrix<C64>] {
        &self.operators
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Identity channel.
    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            operators: vec![DMatrix::identity(dim, dim)],
            num_qubits,
        }
    }
}

/// Applies a Kraus channel; the output trace is preserved to within
/// validation tolerance because the channel is complete.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if ch.num_qubits() != rho.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: 1usize << ch.num_qubits(),
            right: rho.dim(),
        });
    }
    let dim = rho.dim();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for op in ch.operators() {
        out += op * rho.matrix() * op.adjoint();
    }
    DensityOperator::from_hermitian_unchecked(out)
}

fn sqrt_psd(mat: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = mat.clone().symmetric_eigen();
    let sqrt_vals = eig
        .eigenvalues
        .map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity F(a,b) = (Tr sqrt(sqrt(a) b sqrt(a)))^2, in [0,1].
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let sa = sqrt_psd(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    // inner is similar to a PSD product; symmetrize before the eigensolve.
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let root_sum: f64 = inner
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Trace distance D(a,b) = ||a - b||_1 / 2, in [0,1].
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(trace_distance_matrices(a.matrix(), b.matrix()))
}

/// Trace distance of two Hermitian matrices (no state validation).
pub fn trace_distance_matrices(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let diff = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let sum: f64 = diff
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum();
    (sum / 2.0).max(0.0)
}

/// Classical (Bhattacharyya) fidelity of two outcome distributions.
/// Equals the quantum fidelity of the corresponding diagonal ensembles.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(&x, &y)| (x.max(0.0) * y.max(0.0)).sqrt())
        .sum();
    Ok((s * s).clamp(0.0, 1.0))
}

// Bit convention: qubit `j` of an m-qubit index sits at bit position m-1-j.
#[inline]
fn insert_bit(reduced: usize, shift: usize, bit: usize) -> usize {
    ((reduced >> shift) << (shift + 1)) | (bit << shift) | (reduced & ((1 << shift) - 1))
}

/// Partial trace over one qubit (matrix-level helper).
pub fn partial_trace_qubit(mat: &DMatrix<C64>, qubit: usize, m: usize) -> DMatrix<C64> {
    let shift = m - 1 - qubit;
    let dim = 1usize << (m - 1);
    DMatrix::from_fn(dim, dim, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..2 {
            acc += mat[(insert_bit(r, shift, b), insert_bit(c, shift, b))];
        }
        acc
    })
}

fn insert_mixed_qubit(mat: &DMatrix<C64>, qubit: usize, m: usize) -> DMatrix<C64> {
    let shift = m - 1 - qubit;
    let dim = 1usize << m;
    DMatrix::from_fn(dim, dim, |r, c| {
        let (rb, cb) = ((r >> shift) & 1, (c >> shift) & 1);
        if rb != cb {
            return C64::new(0.0, 0.0);
        }
        let strip = |x: usize| ((x >> (shift + 1)) << shift) | (x & ((1 << shift) - 1));
        mat[(strip(r), strip(c))] * C64::new(0.5, 0.0)
    })
}

/// Traces out the qubits at `positions` and replaces each with I/2,
/// leaving all other marginals unchanged.
pub fn partial_replace(rho: &DensityOperator, positions: &[usize]) -> Result<DensityOperator> {
    let m = rho.num_qubits();
    let mut sorted: Vec<usize> = positions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &q in &sorted {
        if q >= m {
            return Err(Error::IndexOutOfRange {
                index: q,
                num_qubits: m,
            });
        }
    }
    let mut mat = rho.matrix().clone();
    for &q in &sorted {
        mat = insert_mixed_qubit(&partial_trace_qubit(&mat, q, m), q, m);
    }
    DensityOperator::from_hermitian_unchecked(mat)
}

/// Outcome statistics of a product-Pauli measurement.
///
/// Outcome index `b`: bit `j` is 0 for the +1 eigenvalue of the letter on
/// qubit `j` and 1 for the -1 eigenvalue (so Z-basis bit 0 means |0>).
#[derive(Clone, Debug)]
pub struct MeasurementStatistics {
    letters: Vec<PauliLetter>,
    probabilities: Vec<f64>,
}

impl MeasurementStatistics {
    pub fn new(letters: Vec<PauliLetter>, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != 1usize << letters.len() {
            return Err(Error::LengthMismatch {
                left: probabilities.len(),
                right: 1usize << letters.len(),
            });
        }
        let mut sum = 0.0;
        for &p in &probabilities {
            if p < -1e-9 {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidDistribution(format!("sum {sum} is not 1")));
        }
        Ok(Self {
            letters,
            probabilities,
        })
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    /// The dephased ensemble sum_b p_b |psi_b><psi_b| as a state.
    pub fn ensemble(&self) -> Result<DensityOperator> {
        let basis = product_basis(&self.letters)?;
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            self.probabilities.len(),
            self.probabilities.iter().map(|&p| C64::new(p.max(0.0), 0.0)),
        ));
        DensityOperator::from_hermitian_unchecked(&basis * diag * basis.adjoint())
    }
}

/// Single-qubit eigenbasis of a measurement letter; column b is the
/// eigenvector with eigenvalue (-1)^b.
pub fn letter_basis(letter: PauliLetter) -> Result<Matrix2<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, l) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    match letter {
        PauliLetter::Z => Ok(Matrix2::new(o, l, l, o)),
        PauliLetter::X => Ok(Matrix2::new(
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(-s, 0.0),
        )),
        PauliLetter::Y => Ok(Matrix2::new(
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(0.0, s),
            C64::new(0.0, -s),
        )),
        PauliLetter::I => Err(Error::InvalidArgument(
            "identity is not a measurement basis".into(),
        )),
    }
}

/// Tensor-product change-of-basis matrix for a letter assignment.
pub fn product_basis(letters: &[PauliLetter]) -> Result<DMatrix<C64>> {
    let mut basis = DMatrix::<C64>::identity(1, 1);
    for &letter in letters {
        let b2 = letter_basis(letter)?;
        basis = basis.kronecker(&DMatrix::from_fn(2, 2, |r, c| b2[(r, c)]));
    }
    Ok(basis)
}

/// Measures every qubit in the given Pauli letter basis and returns the
/// outcome distribution p_b = <psi_b| rho |psi_b>.
pub fn measurement_statistics(
    rho: &DensityOperator,
    letters: &[PauliLetter],
) -> Result<MeasurementStatistics> {
    if letters.len() != rho.num_qubits() {
        return Err(Error::LengthMismatch {
            left: letters.len(),
            right: rho.num_qubits(),
        });
    }
    let basis = product_basis(letters)?;
    let rotated = basis.adjoint() * rho.matrix() * &basis;
    let probs: Vec<f64> = (0..rho.dim())
        .map(|b| rotated[(b, b)].re.max(0.0))
        .collect();
    MeasurementStatistics::new(letters.to_vec(), probs)
}

/// Draws one outcome index from the statistics (inverse-CDF; deterministic
/// under a fixed generator state).
pub fn sample_outcome<R: Rng + ?Sized>(stats: &MeasurementStatistics, rng: &mut R) -> usize {
    sample_index(stats.probabilities(), rng)
}

/// Inverse-CDF sampling from a bare probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.max(0.0);
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliLetter::{X, Y, Z};
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn ket0() -> DensityOperator {
        DensityOperator::basis_state(1, 0).unwrap()
    }

    fn ket1() -> DensityOperator {
        DensityOperator::basis_state(1, 1).unwrap()
    }

    fn plus() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        DensityOperator::from_pure(&v).unwrap()
    }

    fn ghz(n: usize) -> DensityOperator {
        let dim = 1usize << n;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(dim);
        v[0] = C64::new(s, 0.0);
        v[dim - 1] = C64::new(s, 0.0);
        DensityOperator::from_pure(&v).unwrap()
    }

    #[test]
    fn construction_rejects_bad_states() {
        let dim2 = DMatrix::<C64>::identity(2, 2);
        assert!(matches!(
            DensityOperator::new(dim2),
            Err(Error::InvalidTrace(_))
        ));
        let skew = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5, 0.0),
                C64::new(0.3, 0.0),
                C64::new(-0.3, 0.0),
                C64::new(0.5, 0.0),
            ],
        );
        assert!(matches!(
            DensityOperator::new(skew),
            Err(Error::NotHermitian(_))
        ));
        let neg = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-0.5, 0.0),
            ],
        );
        assert!(matches!(DensityOperator::new(neg), Err(Error::NotPsd(_))));
    }

    #[test]
    fn fidelity_identity_orthogonal_and_mixed() {
        let rho = DensityOperator::random(2, &mut stream_rng(1, 0));
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fidelity(&ket0(), &ket1()).unwrap(), 0.0, epsilon = 1e-12);
        // pure first argument: F = Tr(rho_pure sigma) = <0| I/2 |0> = 1/2
        let mixed = DensityOperator::maximally_mixed(1);
        assert_abs_diff_eq!(fidelity(&ket0(), &mixed).unwrap(), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_dimension_mismatch_errors() {
        assert!(fidelity(&ket0(), &ghz(2)).is_err());
        assert!(trace_distance(&ket0(), &ghz(2)).is_err());
    }

    #[test]
    fn trace_distance_basics() {
        let rho = DensityOperator::random(2, &mut stream_rng(1, 1));
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            trace_distance(&ket0(), &ket1()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fuchs_van_de_graaf_on_random_pairs() {
        // 200 random pairs at m in {1,2,3}: 1 - sqrt(F) <= D <= sqrt(1-F).
        for m in 1..=3usize {
            let mut rng = stream_rng(42, m as u64);
            for _ in 0..200 {
                let a = DensityOperator::random(m, &mut rng);
                let b = DensityOperator::random(m, &mut rng);
                let f = fidelity(&a, &b).unwrap();
                let d = trace_distance(&a, &b).unwrap();
                assert!(1.0 - f.sqrt() <= d + 1e-9, "lower FvdG failed: F={f} D={d}");
                assert!(d <= (1.0 - f).sqrt() + 1e-9, "upper FvdG failed: F={f} D={d}");
            }
        }
    }

    #[test]
    fn kraus_channel_requires_completeness() {
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!(KrausChannel::new(vec![x.clone()]).is_ok());
        assert!(matches!(
            KrausChannel::new(vec![x * C64::new(0.5, 0.0)]),
            Err(Error::CompletenessViolation(_))
        ));
    }

    #[test]
    fn apply_channel_identity_dephasing_and_flip() {
        let rho = DensityOperator::random(1, &mut stream_rng(2, 0));
        let id = KrausChannel::identity(1);
        assert!(apply_channel(&id, &rho)
            .unwrap()
            .max_abs_diff(&rho)
            .abs()
            < 1e-12);

        // full dephasing {|0><0|, |1><1|} sends |+><+| to I/2
        let p0 = ket0().into_matrix();
        let p1 = ket1().into_matrix();
        let deph = KrausChannel::new(vec![p0, p1]).unwrap();
        let out = apply_channel(&deph, &plus()).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(1)) < 1e-12);

        // single-Kraus X maps |0><0| to |1><1|
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let flip = KrausChannel::new(vec![x]).unwrap();
        assert!(apply_channel(&flip, &ket0()).unwrap().max_abs_diff(&ket1()) < 1e-12);
    }

    #[test]
    fn channel_preserves_trace() {
        let mut rng = stream_rng(3, 0);
        let rho = DensityOperator::random(2, &mut rng);
        // random 2-qubit Kraus channel from a Haar-ish isometry
        let dim = 4;
        let k = 3;
        let g = DMatrix::from_fn(k * dim, dim, |_, _| {
            C64::new(standard_normal(&mut rng), standard_normal(&mut rng))
        });
        let q = g.qr().q();
        let ops: Vec<_> = (0..k).map(|i| q.rows(i * dim, dim).into_owned()).collect();
        let ch = KrausChannel::new(ops).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        assert_abs_diff_eq!(out.matrix().trace().re, 1.0, epsilon = 1e-10);
        out.validate_full().unwrap();
    }

    #[test]
    fn partial_replace_empty_product_and_ghz() {
        let rho = DensityOperator::random(2, &mut stream_rng(4, 0));
        assert!(partial_replace(&rho, &[]).unwrap().max_abs_diff(&rho) < 1e-12);

        // |00><00| with qubit 1 replaced: |0><0| (x) I/2
        let zz = DensityOperator::basis_state(2, 0).unwrap();
        let expect = ket0().tensor(&DensityOperator::maximally_mixed(1)).unwrap();
        assert!(partial_replace(&zz, &[1]).unwrap().max_abs_diff(&expect) < 1e-12);

        // GHZ_2 with qubit 0 replaced: I/2 (x) I/2 (explicit 4x4 computation:
        // tracing either GHZ qubit leaves I/2 and kills coherences).
        let out = partial_replace(&ghz(2), &[0]).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-12);

        assert!(partial_replace(&zz, &[2]).is_err());
    }

    #[test]
    fn partial_replace_idempotent_and_commuting() {
        let rho = DensityOperator::random(3, &mut stream_rng(4, 1));
        let once = partial_replace(&rho, &[1]).unwrap();
        let twice = partial_replace(&once, &[1]).unwrap();
        assert!(once.max_abs_diff(&twice) < 1e-12);

        let ab = partial_replace(&partial_replace(&rho, &[0]).unwrap(), &[2]).unwrap();
        let ba = partial_replace(&partial_replace(&rho, &[2]).unwrap(), &[0]).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn measurement_statistics_z_and_x() {
        let stats = measurement_statistics(&ket0(), &[Z]).unwrap();
        assert_abs_diff_eq!(stats.probabilities()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stats.probabilities()[1], 0.0, epsilon = 1e-12);

        let stats = measurement_statistics(&ket0(), &[X]).unwrap();
        assert_abs_diff_eq!(stats.probabilities()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(stats.probabilities()[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ghz_phase_parity_statistics() {
        // GHZ_3 with per-qubit phase theta measured in XXX: the +1-parity
        // probability is (1 + cos 3 theta)/2, from (|000> + e^{3i t}|111>)/sqrt(2).
        let theta = 0.37f64;
        let n = 3;
        let mut u = DMatrix::<C64>::identity(1, 1);
        for _ in 0..n {
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
                C64::new(1.0, 0.0),
                C64::new(theta.cos(), theta.sin()),
            ]));
            u = u.kronecker(&d);
        }
        let enc = ghz(n).conjugated_by(&u).unwrap();
        let stats = measurement_statistics(&enc, &[X, X, X]).unwrap();
        let plus_parity: f64 = stats
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(b, _)| b.count_ones() % 2 == 0)
            .map(|(_, &p)| p)
            .sum();
        assert_abs_diff_eq!(
            plus_parity,
            (1.0 + (3.0 * theta).cos()) / 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn dephasing_is_idempotent() {
        let rho = DensityOperator::random(2, &mut stream_rng(5, 0));
        let letters = [X, Y];
        let once = measurement_statistics(&rho, &letters).unwrap();
        let again = measurement_statistics(&once.ensemble().unwrap(), &letters).unwrap();
        for (a, b) in once.probabilities().iter().zip(again.probabilities()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let stats = MeasurementStatistics::new(vec![Z], vec![1.0, 0.0]).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..32 {
            assert_eq!(sample_outcome(&stats, &mut rng), 0);
        }

        let fair = MeasurementStatistics::new(vec![Z], vec![0.5, 0.5]).unwrap();
        let mut rng = stream_rng(6, 1);
        let n = 100_000usize;
        let ones: usize = (0..n).map(|_| sample_outcome(&fair, &mut rng)).sum();
        let freq = ones as f64 / n as f64;
        // 3 sigma CLT band around 0.5
        assert!((freq - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());

        let a: Vec<usize> = {
            let mut r = stream_rng(6, 2);
            (0..64).map(|_| sample_outcome(&fair, &mut r)).collect()
        };
        let b: Vec<usize> = {
            let mut r = stream_rng(6, 2);
            (0..64).map(|_| sample_outcome(&fair, &mut r)).collect()
        };
        assert_eq!(a, b);
    }
}
