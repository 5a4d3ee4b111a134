//! The single-qubit Clifford group, local (tensor-product) Cliffords, and
//! the per-qubit twirling sums.
//!
//! The 24-element table is generated at startup from words in {H, S} and
//! canonicalized by conjugation action on (X, Z), so there is nothing to
//! transcribe and the group axioms are checked once at build time.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};

use super::{PauliLetter, PauliString, Phase};
use crate::error::{Error, Result};
use crate::linalg::{partial_replace, DensityOperator, C64};
#[cfg(test)]
use crate::linalg::max_abs;

/// |C_1| — the number of single-qubit Cliffords modulo global phase.
pub const CLIFFORD_GROUP_SIZE: usize = 24;

/// A Pauli letter with a sign, the image of a letter under conjugation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedLetter {
    pub sign: i8,
    pub letter: PauliLetter,
}

impl SignedLetter {
    fn encode(self) -> usize {
        let l = match self.letter {
            PauliLetter::X => 0,
            PauliLetter::Y => 1,
            PauliLetter::Z => 2,
            PauliLetter::I => 3,
        };
        l * 2 + usize::from(self.sign < 0)
    }

    pub fn matrix(self) -> Matrix2<C64> {
        self.letter.matrix() * C64::new(f64::from(self.sign), 0.0)
    }
}

impl fmt::Display for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            if self.sign < 0 { '-' } else { '+' },
            self.letter.to_char()
        )
    }
}

/// One single-qubit Clifford: a unitary (fixed global phase) plus its
/// conjugation action on X, Y, Z.
#[derive(Clone, Debug)]
pub struct SingleClifford {
    matrix: Matrix2<C64>,
    images: [SignedLetter; 3], // X, Y, Z
}

impl SingleClifford {
    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    /// c L c† as a signed letter; identity maps to itself.
    pub fn image(&self, letter: PauliLetter) -> SignedLetter {
        match letter {
            PauliLetter::I => SignedLetter {
                sign: 1,
                letter: PauliLetter::I,
            },
            PauliLetter::X => self.images[0],
            PauliLetter::Y => self.images[1],
            PauliLetter::Z => self.images[2],
        }
    }

    fn signature(&self) -> usize {
        self.images[0].encode() * 8 + self.images[2].encode()
    }
}

/// The canonical single-qubit Clifford table.
pub struct CliffordTable {
    elements: Vec<SingleClifford>,
    identity_index: usize,
}

impl CliffordTable {
    pub fn elements(&self) -> &[SingleClifford] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> &SingleClifford {
        &self.elements[index]
    }

    pub fn identity_index(&self) -> usize {
        self.identity_index
    }

    /// Index of the element with the given action on X and Z, if any.
    pub fn find(&self, x_image: SignedLetter, z_image: SignedLetter) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.images[0] == x_image && e.images[2] == z_image)
    }
}

fn hadamard() -> Matrix2<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix2::new(
        C64::new(s, 0.0),
        C64::new(s, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
    )
}

fn s_gate() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 1.0),
    )
}

// Symbolic conjugation action of the generators on signed letters.
fn generator_action(gen: char, sl: SignedLetter) -> SignedLetter {
    use PauliLetter::*;
    let (sign, letter) = match (gen, sl.letter) {
        ('H', X) => (1, Z),
        ('H', Y) => (-1, Y),
        ('H', Z) => (1, X),
        ('S', X) => (1, Y),
        ('S', Y) => (-1, X),
        ('S', Z) => (1, Z),
        (_, I) => (1, I),
        _ => unreachable!(),
    };
    SignedLetter {
        sign: sl.sign * sign,
        letter,
    }
}

fn canonicalize_phase(mut m: Matrix2<C64>) -> Matrix2<C64> {
    for idx in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let v = m[idx];
        if v.norm() > 1e-8 {
            let phase = v / C64::new(v.norm(), 0.0);
            m *= phase.conj();
            return m;
        }
    }
    m
}

fn build_table() -> CliffordTable {
    let id = SingleClifford {
        matrix: Matrix2::identity(),
        images: [
            SignedLetter {
                sign: 1,
                letter: PauliLetter::X,
            },
            SignedLetter {
                sign: 1,
                letter: PauliLetter::Y,
            },
            SignedLetter {
                sign: 1,
                letter: PauliLetter::Z,
            },
        ],
    };
    let mut by_sig: Vec<Option<SingleClifford>> = vec![None; 64];
    by_sig[id.signature()] = Some(id.clone());
    let mut queue = vec![id];
    while let Some(elem) = queue.pop() {
        for (gen, gen_mat) in [('H', hadamard()), ('S', s_gate())] {
            let images = [
                generator_action(gen, elem.images[0]),
                generator_action(gen, elem.images[1]),
                generator_action(gen, elem.images[2]),
            ];
            let cand = SingleClifford {
                matrix: canonicalize_phase(gen_mat * elem.matrix),
                images,
            };
            let sig = cand.signature();
            if by_sig[sig].is_none() {
                by_sig[sig] = Some(cand.clone());
                queue.push(cand);
            }
        }
    }
    let elements: Vec<SingleClifford> = by_sig.into_iter().flatten().collect();
    assert_eq!(
        elements.len(),
        CLIFFORD_GROUP_SIZE,
        "single-qubit Clifford table must close at 24 elements"
    );
    for e in &elements {
        // numerical action must agree with the symbolic bookkeeping
        for letter in PauliLetter::NON_IDENTITY {
            let num = e.matrix * letter.matrix() * e.matrix.adjoint();
            let dev = (num - e.image(letter).matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-12, "table image disagrees with matrix conjugation");
        }
    }
    let identity_index = elements
        .iter()
        .position(|e| {
            e.image(PauliLetter::X)
                == SignedLetter {
                    sign: 1,
                    letter: PauliLetter::X,
                }
                && e.image(PauliLetter::Z)
                    == SignedLetter {
                        sign: 1,
                        letter: PauliLetter::Z,
                    }
        })
        .expect("identity element");
    CliffordTable {
        elements,
        identity_index,
    }
}

/// The shared, lazily built 24-element table.
pub fn clifford_table() -> &'static CliffordTable {
    static TABLE: OnceLock<CliffordTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

/// The multiset { c p c† : c in C_1 } for a non-identity letter; contains
/// each of +-X, +-Y, +-Z exactly four times.
pub fn uniform_clifford_image(letter: PauliLetter) -> Result<Vec<SignedLetter>> {
    if letter.is_identity() {
        return Err(Error::InvalidArgument(
            "identity maps to itself under conjugation; not a valid query".into(),
        ));
    }
    Ok(clifford_table()
        .elements()
        .iter()
        .map(|e| e.image(letter))
        .collect())
}

/// A tensor product of single-qubit Cliffords, stored as table indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalClifford {
    indices: Vec<usize>,
}

impl LocalClifford {
    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= CLIFFORD_GROUP_SIZE) {
            return Err(Error::InvalidArgument(format!(
                "Clifford index {bad} out of range 0..{CLIFFORD_GROUP_SIZE}"
            )));
        }
        Ok(Self { indices })
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self {
            indices: vec![clifford_table().identity_index(); num_qubits],
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        Self {
            indices: (0..num_qubits)
                .map(|_| rng.random_range(0..CLIFFORD_GROUP_SIZE))
                .collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn index(&self, qubit: usize) -> usize {
        self.indices[qubit]
    }

    /// Image of a letter on one qubit under this Clifford.
    pub fn image_at(&self, qubit: usize, letter: PauliLetter) -> SignedLetter {
        clifford_table().element(self.indices[qubit]).image(letter)
    }

    /// Tensor two local Cliffords side by side.
    pub fn tensor(&self, other: &LocalClifford) -> LocalClifford {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        LocalClifford { indices }
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let mut mat = DMatrix::<C64>::identity(1, 1);
        let table = clifford_table();
        for &i in &self.indices {
            let m2 = table.element(i).matrix();
            mat = mat.kronecker(&DMatrix::from_fn(2, 2, |r, c| m2[(r, c)]));
        }
        mat
    }
}

impl fmt::Display for LocalClifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for LocalClifford {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidArgument(format!("bad Clifford spec '{s}'")))?;
        let indices = inner
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("bad Clifford index: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(indices)
    }
}

/// C p C† for a local Clifford: letterwise, weight-preserving, with the
/// accumulated sign folded into the phase.
pub fn conjugate(c: &LocalClifford, p: &PauliString) -> Result<PauliString> {
    if c.num_qubits() != p.num_qubits() {
        return Err(Error::LengthMismatch {
            left: c.num_qubits(),
            right: p.num_qubits(),
        });
    }
    let mut phase = p.phase();
    let letters = p
        .letters()
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let img = c.image_at(j, l);
            if img.sign < 0 {
                phase = phase.negated();
            }
            img.letter
        })
        .collect();
    Ok(PauliString::new(phase, letters))
}

// Single-qubit sandwich A_j M B_j with 2x2 blocks acting on qubit j.
fn single_qubit_sandwich(
    mat: &DMatrix<C64>,
    qubit: usize,
    m: usize,
    a: &Matrix2<C64>,
    b: &Matrix2<C64>,
) -> DMatrix<C64> {
    let shift = m - 1 - qubit;
    let dim = mat.nrows();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for r in 0..dim {
        let rb = (r >> shift) & 1;
        for c in 0..dim {
            let cb = (c >> shift) & 1;
            let mut acc = C64::new(0.0, 0.0);
            for ra in 0..2 {
                let rr = (r & !(1 << shift)) | (ra << shift);
                for cbp in 0..2 {
                    let cc = (c & !(1 << shift)) | (cbp << shift);
                    acc += a[(rb, ra)] * mat[(rr, cc)] * b[(cbp, cb)];
                }
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// (1/24) sum_c c_j M c_j† on one qubit: the single-qubit Clifford group is
/// a unitary 1-design, so this sends the qubit's marginal to I/2.
pub(crate) fn clifford_average_qubit(mat: &DMatrix<C64>, qubit: usize, m: usize) -> DMatrix<C64> {
    let table = clifford_table();
    let mut acc = DMatrix::<C64>::zeros(mat.nrows(), mat.ncols());
    for e in table.elements() {
        acc += single_qubit_sandwich(mat, qubit, m, e.matrix(), &e.matrix().adjoint());
    }
    acc * C64::new(1.0 / CLIFFORD_GROUP_SIZE as f64, 0.0)
}

/// (1/3)(X_j M X_j + Y_j M Y_j + Z_j M Z_j): the key-averaged conjugation
/// a non-identity attack letter induces on one qubit.
pub(crate) fn uniform_letter_conjugation(mat: &DMatrix<C64>, qubit: usize, m: usize) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::zeros(mat.nrows(), mat.ncols());
    for letter in PauliLetter::NON_IDENTITY {
        let l2 = letter.matrix();
        acc += single_qubit_sandwich(mat, qubit, m, &l2, &l2);
    }
    acc * C64::new(1.0 / 3.0, 0.0)
}

/// The local-Clifford twirling sum
/// (1/24^m) sum_C (C q C†) sigma (C r C†), evaluated by per-qubit
/// factorized enumeration (24 terms per qubit, never 24^m keys).
///
/// The result is the zero matrix whenever the letters of q and r differ at
/// any position; for q = r it is a valid density operator.
pub fn twirl_sum(
    q: &PauliString,
    r: &PauliString,
    sigma: &DensityOperator,
) -> Result<DMatrix<C64>> {
    let m = sigma.num_qubits();
    if q.num_qubits() != m || r.num_qubits() != m {
        return Err(Error::LengthMismatch {
            left: q.num_qubits().max(r.num_qubits()),
            right: m,
        });
    }
    let table = clifford_table();
    let mut mat = sigma.matrix().clone();
    let norm = C64::new(1.0 / CLIFFORD_GROUP_SIZE as f64, 0.0);
    for j in 0..m {
        let (qj, rj) = (q.letter(j), r.letter(j));
        if qj.is_identity() && rj.is_identity() {
            continue;
        }
        let mut acc = DMatrix::<C64>::zeros(mat.nrows(), mat.ncols());
        for e in table.elements() {
            let a = e.image(qj).matrix();
            let b = e.image(rj).matrix();
            acc += single_qubit_sandwich(&mat, j, m, &a, &b);
        }
        mat = acc * norm;
    }
    Ok(mat * (q.phase().as_complex() * r.phase().as_complex()))
}

/// Coefficients c_y of the closed form S_q = sum_{y <= x} c_y Tr_y sigma,
/// keyed by the replaced-qubit subsets. Built by the appending recursion:
/// each new support position maps c_y to (4/3)c_y on y+delta_j and
/// (-1/3)c_y on y. The coefficients always sum to 1.
pub fn s_q_coefficients(q: &PauliString) -> Vec<(Vec<usize>, f64)> {
    let support = q.support();
    let mut coeffs = vec![1.0f64];
    for k in 0..support.len() {
        let mut next = vec![0.0f64; coeffs.len() * 2];
        for (mask, &c) in coeffs.iter().enumerate() {
            next[mask] += -c / 3.0;
            next[mask | (1 << k)] += 4.0 * c / 3.0;
        }
        coeffs = next;
    }
    coeffs
        .into_iter()
        .enumerate()
        .map(|(mask, c)| {
            let positions: Vec<usize> = support
                .iter()
                .enumerate()
                .filter_map(|(k, &p)| ((mask >> k) & 1 == 1).then_some(p))
                .collect();
            (positions, c)
        })
        .collect()
}

/// Closed form of the equal-letter twirl: sum over replaced-qubit subsets
/// of the support with the recursive coefficients; equals
/// `twirl_sum(q, q, sigma)` for +1-phase q.
pub fn s_q_closed_form(q: &PauliString, sigma: &DensityOperator) -> Result<DMatrix<C64>> {
    if q.phase() != Phase::PLUS_ONE {
        return Err(Error::InvalidArgument(
            "closed form is defined for +1-phase Pauli strings".into(),
        ));
    }
    if q.num_qubits() != sigma.num_qubits() {
        return Err(Error::LengthMismatch {
            left: q.num_qubits(),
            right: sigma.num_qubits(),
        });
    }
    let dim = sigma.dim();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for (positions, coeff) in s_q_coefficients(q) {
        let replaced = partial_replace(sigma, &positions)?;
        out += replaced.matrix() * C64::new(coeff, 0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityOperator;
    use crate::rng::stream_rng;
    use rand::Rng;
    use std::collections::HashMap;

    #[test]
    fn table_has_24_distinct_elements() {
        let table = clifford_table();
        assert_eq!(table.elements().len(), 24);
        let mut sigs: Vec<usize> = table.elements().iter().map(|e| e.signature()).collect();
        sigs.sort_unstable();
        sigs.dedup();
        assert_eq!(sigs.len(), 24);
        let id = table.element(table.identity_index());
        assert!((id.matrix() - Matrix2::<C64>::identity()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn uniform_image_hits_each_signed_letter_four_times() {
        for letter in PauliLetter::NON_IDENTITY {
            let images = uniform_clifford_image(letter).unwrap();
            assert_eq!(images.len(), 24);
            let mut counts: HashMap<(i8, PauliLetter), usize> = HashMap::new();
            for img in images {
                *counts.entry((img.sign, img.letter)).or_default() += 1;
            }
            assert_eq!(counts.len(), 6);
            assert!(counts.values().all(|&c| c == 4));
        }
        assert!(uniform_clifford_image(PauliLetter::I).is_err());
    }

    #[test]
    fn conjugate_identity_and_hadamard() {
        let p: PauliString = "ZI".parse().unwrap();
        let id = LocalClifford::identity(2);
        assert_eq!(conjugate(&id, &p).unwrap(), p);

        let table = clifford_table();
        let h = table
            .find(
                SignedLetter {
                    sign: 1,
                    letter: PauliLetter::Z,
                },
                SignedLetter {
                    sign: 1,
                    letter: PauliLetter::X,
                },
            )
            .expect("Hadamard in table");
        let c = LocalClifford::from_indices(vec![h, table.identity_index()]).unwrap();
        assert_eq!(conjugate(&c, &p).unwrap().to_string(), "+XI");
    }

    #[test]
    fn conjugation_preserves_commutation() {
        let mut rng = stream_rng(11, 0);
        let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
        for _ in 0..50 {
            let m = 3;
            let rand_string = |rng: &mut crate::rng::SimRng| {
                let ls: Vec<PauliLetter> = (0..m)
                    .map(|_| letters[rng.random_range(0..4)])
                    .collect();
                PauliString::new(Phase::PLUS_ONE, ls)
            };
            let p = rand_string(&mut rng);
            let q = rand_string(&mut rng);
            let c = LocalClifford::random(m, &mut rng);
            let cp = conjugate(&c, &p).unwrap();
            let cq = conjugate(&c, &q).unwrap();
            assert_eq!(
                p.commutes_with(&q).unwrap(),
                cp.commutes_with(&cq).unwrap()
            );
        }
    }

    #[test]
    fn conjugate_matches_matrix_conjugation() {
        let mut rng = stream_rng(11, 1);
        for _ in 0..20 {
            let m = 2;
            let c = LocalClifford::random(m, &mut rng);
            let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
            let p = PauliString::new(
                Phase::PLUS_ONE,
                (0..m).map(|_| letters[rng.random_range(0..4)]).collect(),
            );
            let symbolic = conjugate(&c, &p).unwrap().matrix();
            let u = c.matrix();
            let numeric = &u * p.matrix() * u.adjoint();
            assert!(max_abs(&(symbolic - numeric)) < 1e-12);
        }
    }

    #[test]
    fn twirl_identity_letters_is_identity_map() {
        let sigma = DensityOperator::random(2, &mut stream_rng(12, 0));
        let id = PauliString::identity(2);
        let out = twirl_sum(&id, &id, &sigma).unwrap();
        assert!(max_abs(&(out - sigma.matrix())) < 1e-12);
    }

    #[test]
    fn twirl_of_distinct_strings_vanishes() {
        let sigma = DensityOperator::random(2, &mut stream_rng(12, 1));
        let q: PauliString = "XI".parse().unwrap();
        let r: PauliString = "ZI".parse().unwrap();
        assert!(max_abs(&twirl_sum(&q, &r, &sigma).unwrap()) < 1e-10);
        // differing only on the second qubit
        let q2: PauliString = "XY".parse().unwrap();
        let r2: PauliString = "XZ".parse().unwrap();
        assert!(max_abs(&twirl_sum(&q2, &r2, &sigma).unwrap()) < 1e-10);
    }

    #[test]
    fn twirl_weight_one_closed_form() {
        // q = r = X on one qubit, sigma = |0><0|:
        // S = (X s X + Y s Y + Z s Z)/3 = diag(1/3, 2/3) = (4/3) I/2 - (1/3) s
        let sigma = DensityOperator::basis_state(1, 0).unwrap();
        let q: PauliString = "X".parse().unwrap();
        let out = twirl_sum(&q, &q, &sigma).unwrap();
        assert!((out[(0, 0)].re - 1.0 / 3.0).abs() < 1e-12);
        assert!((out[(1, 1)].re - 2.0 / 3.0).abs() < 1e-12);
        assert!(out[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn closed_form_matches_twirl() {
        let mut rng = stream_rng(12, 2);
        let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
        for m in 1..=2usize {
            for code in 0..4usize.pow(m as u32) {
                let ls: Vec<PauliLetter> = (0..m).map(|j| letters[(code >> (2 * j)) & 3]).collect();
                let q = PauliString::new(Phase::PLUS_ONE, ls);
                let sigma = DensityOperator::random(m, &mut rng);
                let a = twirl_sum(&q, &q, &sigma).unwrap();
                let b = s_q_closed_form(&q, &sigma).unwrap();
                assert!(max_abs(&(a - b)) < 1e-10, "mismatch for q = {q}");
            }
        }
    }

    #[test]
    fn coefficients_sum_to_one_and_cover_all_subsets() {
        let q: PauliString = "XIZY".parse().unwrap();
        let coeffs = s_q_coefficients(&q);
        assert_eq!(coeffs.len(), 8); // 2^weight
        let sum: f64 = coeffs.iter().map(|(_, c)| c).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for (positions, _) in &coeffs {
            assert!(positions.iter().all(|p| [0, 2, 3].contains(p)));
        }
    }

    #[test]
    fn twirl_commutes_with_local_encoding() {
        // local unitary on a block passes through the equal-letter twirl
        let mut rng = stream_rng(12, 3);
        let m = 4;
        let theta = 0.61f64;
        let mut u = DMatrix::<C64>::identity(1, 1);
        for j in 0..m {
            let d = if j < 2 {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    C64::new(1.0, 0.0),
                    C64::new(theta.cos(), theta.sin()),
                ]))
            } else {
                DMatrix::identity(2, 2)
            };
            u = u.kronecker(&d);
        }
        for _ in 0..4 {
            let sigma = DensityOperator::random(m, &mut rng);
            let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
            let q = PauliString::new(
                Phase::PLUS_ONE,
                (0..m).map(|_| letters[rng.random_range(0..4)]).collect(),
            );
            let encoded = sigma.conjugated_by(&u).unwrap();
            let lhs = twirl_sum(&q, &q, &encoded).unwrap();
            let rhs = &u * twirl_sum(&q, &q, &sigma).unwrap() * u.adjoint();
            assert!(max_abs(&(lhs - rhs)) < 1e-9);
        }
    }
}
