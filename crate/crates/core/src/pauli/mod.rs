//! The m-qubit Pauli group, the 24-element single-qubit Clifford group and
//! its tensor powers, flag-position permutations, and the twirling sums the
//! protocol analysis is built on.

mod clifford;
mod stabilizer;

pub use clifford::{
    clifford_table, conjugate, s_q_closed_form, s_q_coefficients, twirl_sum,
    uniform_clifford_image, LocalClifford, SignedLetter, CLIFFORD_GROUP_SIZE,
};
pub(crate) use clifford::{clifford_average_qubit, uniform_letter_conjugation};
pub use stabilizer::{ghz_stabilizer_group, stabilizer_group_of, StabilizerGroup};

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, C64};

/// A fourth root of unity i^k, the phase of a Pauli string.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn as_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn negated(self) -> Self {
        Phase((self.0 + 2) % 4)
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "+"),
            1 => write!(f, "+i"),
            2 => write!(f, "-"),
            _ => write!(f, "-i"),
        }
    }
}

/// One tensor factor of a Pauli string.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const NON_IDENTITY: [PauliLetter; 3] = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn is_identity(self) -> bool {
        self == PauliLetter::I
    }

    pub fn matrix(self) -> Matrix2<C64> {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliLetter::I => Matrix2::new(o, z, z, o),
            PauliLetter::X => Matrix2::new(z, o, o, z),
            PauliLetter::Y => Matrix2::new(z, -i, i, z),
            PauliLetter::Z => Matrix2::new(o, z, z, -o),
        }
    }

    pub fn anticommutes_with(self, other: PauliLetter) -> bool {
        !self.is_identity() && !other.is_identity() && self != other
    }

    pub fn to_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(PauliLetter::I),
            'X' => Ok(PauliLetter::X),
            'Y' => Ok(PauliLetter::Y),
            'Z' => Ok(PauliLetter::Z),
            other => Err(Error::InvalidArgument(format!(
                "unknown Pauli letter '{other}'"
            ))),
        }
    }
}

/// Single-qubit product a*b = phase * letter.
pub fn letter_mul(a: PauliLetter, b: PauliLetter) -> (Phase, PauliLetter) {
    use PauliLetter::*;
    match (a, b) {
        (I, p) | (p, I) => (Phase::PLUS_ONE, p),
        (p, q) if p == q => (Phase::PLUS_ONE, I),
        (X, Y) => (Phase::PLUS_I, Z),
        (Y, Z) => (Phase::PLUS_I, X),
        (Z, X) => (Phase::PLUS_I, Y),
        (Y, X) => (Phase::MINUS_I, Z),
        (Z, Y) => (Phase::MINUS_I, X),
        (X, Z) => (Phase::MINUS_I, Y),
        _ => unreachable!(),
    }
}

/// A phased m-qubit Pauli operator, e.g. `+XIZ` or `-YY`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<PauliLetter>) -> Self {
        Self { phase, letters }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::new(Phase::PLUS_ONE, vec![PauliLetter::I; num_qubits])
    }

    /// A single non-identity letter at `position`, identity elsewhere.
    pub fn single(num_qubits: usize, position: usize, letter: PauliLetter) -> Result<Self> {
        if position >= num_qubits {
            return Err(Error::IndexOutOfRange {
                index: position,
                num_qubits,
            });
        }
        let mut letters = vec![PauliLetter::I; num_qubits];
        letters[position] = letter;
        Ok(Self::new(Phase::PLUS_ONE, letters))
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn letter(&self, j: usize) -> PauliLetter {
        self.letters[j]
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    /// Number of non-identity letters; weight 0 means the string is
    /// proportional to the identity.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|l| !l.is_identity()).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter_map(|(j, l)| (!l.is_identity()).then_some(j))
            .collect()
    }

    pub fn is_identity_letters(&self) -> bool {
        self.weight() == 0
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn negated(&self) -> Self {
        Self::new(self.phase.negated(), self.letters.clone())
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        Self::new(phase, self.letters.clone())
    }

    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.num_qubits() != rhs.num_qubits() {
            return Err(Error::LengthMismatch {
                left: self.num_qubits(),
                right: rhs.num_qubits(),
            });
        }
        let mut phase = self.phase * rhs.phase;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (ph, l) = letter_mul(a, b);
                phase = phase * ph;
                l
            })
            .collect();
        Ok(PauliString::new(phase, letters))
    }

    pub fn commutes_with(&self, rhs: &PauliString) -> Result<bool> {
        if self.num_qubits() != rhs.num_qubits() {
            return Err(Error::LengthMismatch {
                left: self.num_qubits(),
                right: rhs.num_qubits(),
            });
        }
        let anti = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .filter(|(&a, &b)| a.anticommutes_with(b))
            .count();
        Ok(anti % 2 == 0)
    }

    /// Dense matrix form phase * (L_0 (x) ... (x) L_{m-1}).
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut mat = DMatrix::<C64>::identity(1, 1);
        for letter in &self.letters {
            let l2 = letter.matrix();
            mat = mat.kronecker(&DMatrix::from_fn(2, 2, |r, c| l2[(r, c)]));
        }
        mat * self.phase.as_complex()
    }

    /// P rho P† (global phase drops out).
    pub fn conjugate_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if self.num_qubits() != rho.num_qubits() {
            return Err(Error::LengthMismatch {
                left: self.num_qubits(),
                right: rho.num_qubits(),
            });
        }
        let p = self.matrix();
        DensityOperator::from_hermitian_unchecked(&p * rho.matrix() * p.adjoint())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `+XIZ`, `-YY`, `+iXZ`, `-iZ`, or bare `XIZ` (phase +1).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::PLUS_I, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PLUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else {
            (Phase::PLUS_ONE, s)
        };
        if rest.is_empty() {
            return Err(Error::InvalidArgument("empty Pauli string".into()));
        }
        let letters = rest
            .chars()
            .map(PauliLetter::from_char)
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::new(phase, letters))
    }
}

/// All +1-phase Pauli strings on m qubits with weight at most `max_weight`,
/// identity first, in base-4 letter order.
pub fn enumerate_paulis(m: usize, max_weight: usize) -> Vec<PauliString> {
    const LETTERS: [PauliLetter; 4] = [
        PauliLetter::I,
        PauliLetter::X,
        PauliLetter::Y,
        PauliLetter::Z,
    ];
    let total = 4usize.pow(m as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let letters: Vec<PauliLetter> = (0..m)
            .map(|j| LETTERS[(code >> (2 * (m - 1 - j))) & 3])
            .collect();
        let p = PauliString::new(Phase::PLUS_ONE, letters);
        if p.weight() <= max_weight {
            out.push(p);
        }
    }
    out
}

/// A bijection on qubit positions, generated as the coset representative
/// that sends the trailing flag qubits to a chosen position subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitPermutation {
    /// map[j] = output position of input qubit j
    map: Vec<usize>,
}

impl QubitPermutation {
    pub fn identity(m: usize) -> Self {
        Self {
            map: (0..m).collect(),
        }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &p in &map {
            if p >= m {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    num_qubits: m,
                });
            }
            if seen[p] {
                return Err(Error::InvalidArgument("mapping is not a bijection".into()));
            }
            seen[p] = true;
        }
        Ok(Self { map })
    }

    /// Canonical representative for a flag-position subset: the leading
    /// m-t inputs go, in order, to the non-flag positions (ascending) and
    /// the trailing t inputs to the flag positions (ascending).
    pub fn from_flag_positions(m: usize, flags: &[usize]) -> Result<Self> {
        let t = flags.len();
        if t > m {
            return Err(Error::InvalidArgument(format!(
                "{t} flags exceed {m} qubits"
            )));
        }
        let mut is_flag = vec![false; m];
        for &p in flags {
            if p >= m {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    num_qubits: m,
                });
            }
            if is_flag[p] {
                return Err(Error::InvalidArgument("duplicate flag position".into()));
            }
            is_flag[p] = true;
        }
        let mut map = vec![0usize; m];
        let mut data_iter = (0..m).filter(|&p| !is_flag[p]);
        for j in 0..m - t {
            map[j] = data_iter.next().expect("m-t non-flag positions");
        }
        let mut flag_iter = (0..m).filter(|&p| is_flag[p]);
        for j in m - t..m {
            map[j] = flag_iter.next().expect("t flag positions");
        }
        Ok(Self { map })
    }

    /// Every canonical flag layout for t flags on m qubits (binom(m,t) keys).
    pub fn enumerate_flag_layouts(m: usize, t: usize) -> Vec<Vec<usize>> {
        use itertools::Itertools;
        (0..m).combinations(t).collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Output position of input qubit j.
    pub fn position_of(&self, j: usize) -> usize {
        self.map[j]
    }

    /// Input qubit that lands on output position p.
    pub fn source_of(&self, p: usize) -> usize {
        self.map.iter().position(|&q| q == p).expect("bijection")
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0usize; self.map.len()];
        for (j, &p) in self.map.iter().enumerate() {
            inv[p] = j;
        }
        Self { map: inv }
    }

    /// Relocates the bits of a basis index: bit of input qubit j moves to
    /// output position map[j].
    pub fn permute_index(&self, index: usize) -> usize {
        let m = self.map.len();
        let mut out = 0usize;
        for (j, &p) in self.map.iter().enumerate() {
            let bit = (index >> (m - 1 - j)) & 1;
            out |= bit << (m - 1 - p);
        }
        out
    }

    /// Moves letters along the permutation (phase unchanged).
    pub fn permute_pauli(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.len() {
            return Err(Error::LengthMismatch {
                left: p.num_qubits(),
                right: self.len(),
            });
        }
        let mut letters = vec![PauliLetter::I; self.len()];
        for (j, &letter) in p.letters().iter().enumerate() {
            letters[self.map[j]] = letter;
        }
        Ok(PauliString::new(p.phase(), letters))
    }
}

/// Applies a qubit permutation to a state: qubit j of the input becomes
/// qubit perm(j) of the output.
pub fn apply_permutation(
    perm: &QubitPermutation,
    rho: &DensityOperator,
) -> Result<DensityOperator> {
    if perm.len() != rho.num_qubits() {
        return Err(Error::LengthMismatch {
            left: perm.len(),
            right: rho.num_qubits(),
        });
    }
    let dim = rho.dim();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let remap: Vec<usize> = (0..dim).map(|b| perm.permute_index(b)).collect();
    for r in 0..dim {
        for c in 0..dim {
            out[(remap[r], remap[c])] = rho.matrix()[(r, c)];
        }
    }
    DensityOperator::from_hermitian_unchecked(out)
}
