//! Stabilizer groups: commuting +1-phase Pauli generators, full group
//! enumeration, and the group-average projector identity.

use nalgebra::DMatrix;
use rand::Rng;

use super::{PauliLetter, PauliString};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, DensityOperator, C64};

// GF(2) symplectic encoding: bit j is the X part, bit m+j the Z part.
fn symplectic_bits(p: &PauliString) -> u64 {
    let m = p.num_qubits();
    let mut bits = 0u64;
    for (j, &l) in p.letters().iter().enumerate() {
        match l {
            PauliLetter::X => bits |= 1 << j,
            PauliLetter::Z => bits |= 1 << (m + j),
            PauliLetter::Y => bits |= (1 << j) | (1 << (m + j)),
            PauliLetter::I => {}
        }
    }
    bits
}

fn gf2_rank(mut rows: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let pivot = match rows.iter().position(|&r| (r >> bit) & 1 == 1) {
            Some(p) => p,
            None => continue,
        };
        let pivot_row = rows.swap_remove(pivot);
        for r in rows.iter_mut() {
            if (*r >> bit) & 1 == 1 {
                *r ^= pivot_row;
            }
        }
        rank += 1;
        if rows.is_empty() {
            break;
        }
    }
    rank
}

/// A stabilizer group generated by independent commuting +1-phase Paulis,
/// with all 2^k elements enumerated.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    generators: Vec<PauliString>,
    elements: Vec<PauliString>,
    num_qubits: usize,
}

impl StabilizerGroup {
    /// Algebraic validation only; see [`stabilizer_group_of`] for the
    /// matrix-level projector check.
    pub fn new(generators: Vec<PauliString>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
        let num_qubits = first.num_qubits();
        if generators.len() > num_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} generators exceed {} qubits",
                generators.len(),
                num_qubits
            )));
        }
        for g in &generators {
            if g.num_qubits() != num_qubits {
                return Err(Error::LengthMismatch {
                    left: g.num_qubits(),
                    right: num_qubits,
                });
            }
            if g.phase() != super::Phase::PLUS_ONE {
                return Err(Error::InvalidArgument(format!(
                    "generator {g} must carry a +1 phase"
                )));
            }
            if g.is_identity_letters() {
                return Err(Error::InvalidArgument("identity is not a generator".into()));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in generators.iter().skip(i + 1) {
                if !a.commutes_with(b)? {
                    return Err(Error::InvalidArgument(format!(
                        "generators {a} and {b} anticommute"
                    )));
                }
            }
        }
        let rank = gf2_rank(generators.iter().map(symplectic_bits).collect());
        if rank != generators.len() {
            return Err(Error::InvalidArgument(
                "generators are not independent".into(),
            ));
        }
        // subset products by doubling
        let mut elements = vec![PauliString::identity(num_qubits)];
        for g in &generators {
            let mut extended = Vec::with_capacity(elements.len() * 2);
            for e in &elements {
                extended.push(e.clone());
                extended.push(e.multiply(g)?);
            }
            elements = extended;
        }
        Ok(Self {
            generators,
            elements,
            num_qubits,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> &PauliString {
        &self.elements[rng.random_range(0..self.elements.len())]
    }

    /// (1/|S|) sum_S S as a matrix — the projector onto the stabilized
    /// subspace.
    pub fn group_average(&self) -> DMatrix<C64> {
        let dim = 1usize << self.num_qubits;
        let mut avg = DMatrix::<C64>::zeros(dim, dim);
        for e in &self.elements {
            avg += e.matrix();
        }
        avg / C64::new(self.elements.len() as f64, 0.0)
    }

    /// The stabilized pure state, available when the group is full rank
    /// (as many generators as qubits).
    pub fn stabilized_state(&self) -> Result<DensityOperator> {
        if self.generators.len() != self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} generators on {} qubits do not pin a unique state",
                self.generators.len(),
                self.num_qubits
            )));
        }
        DensityOperator::from_hermitian_unchecked(self.group_average())
    }
}

/// Builds the group and verifies, at the matrix level, that the group
/// average is the projector onto the stabilized subspace.
pub fn stabilizer_group_of(generators: Vec<PauliString>) -> Result<StabilizerGroup> {
    let group = StabilizerGroup::new(generators)?;
    if group.num_qubits() <= 8 {
        let avg = group.group_average();
        let idem = max_abs(&(&avg * &avg - &avg));
        if idem > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "group average is not a projector (deviation {idem:.3e})"
            )));
        }
        let expected_rank = (1usize << group.num_qubits()) / group.len();
        let tr = avg.trace();
        if (tr.re - expected_rank as f64).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "group average has trace {} instead of {expected_rank}",
                tr.re
            )));
        }
    }
    Ok(group)
}

/// Stabilizer group of the n-qubit GHZ state: X^(x)n and Z_i Z_{i+1}.
pub fn ghz_stabilizer_group(n: usize) -> Result<StabilizerGroup> {
    if n == 0 {
        return Err(Error::InvalidArgument("GHZ needs at least one qubit".into()));
    }
    let mut gens = vec![PauliString::new(
        super::Phase::PLUS_ONE,
        vec![PauliLetter::X; n],
    )];
    for i in 0..n.saturating_sub(1) {
        let mut letters = vec![PauliLetter::I; n];
        letters[i] = PauliLetter::Z;
        letters[i + 1] = PauliLetter::Z;
        gens.push(PauliString::new(super::Phase::PLUS_ONE, letters));
    }
    StabilizerGroup::new(gens)
}
