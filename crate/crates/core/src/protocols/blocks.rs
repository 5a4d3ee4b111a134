//! Shared block bookkeeping for the copy-based protocols (DSP/DSM):
//! per-block bit extraction, stabilizer pass/fail on decrypted outcomes,
//! measurement-letter assembly, and acceptance conditioning.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrology::{ObservableSpec, PhaseEncoding};
use crate::pauli::{PauliLetter, PauliString, StabilizerGroup};

/// Bits of block `l` (n qubits) inside an Nn-bit outcome index.
pub(crate) fn block_bits(index: usize, l: usize, n: usize, copies: usize) -> usize {
    let total = n * copies;
    (index >> (total - (l + 1) * n)) & ((1 << n) - 1)
}

/// Whether the per-qubit readout of one block sits in the +1 eigenspace of
/// the stabilizer: the element phase times the product of outcome signs
/// over the support must be +1. Identity draws a vacuous, always-passing
/// test.
pub(crate) fn stabilizer_passes(s: &PauliString, bits: usize, n: usize) -> bool {
    let mut sign = match s.phase() {
        p if p == crate::pauli::Phase::PLUS_ONE => 1i8,
        p if p == crate::pauli::Phase::MINUS_ONE => -1i8,
        _ => unreachable!("stabilizer elements carry real phases"),
    };
    for q in s.support() {
        if (bits >> (n - 1 - q)) & 1 == 1 {
            sign = -sign;
        }
    }
    sign == 1
}

/// Ideal-frame measurement letters: the observable on the encoded block,
/// each tested block in its stabilizer's letters, and `fill` called for
/// the identity positions (their outcomes are ignored either way).
pub(crate) fn measurement_letters(
    n: usize,
    copies: usize,
    obs: &ObservableSpec,
    l: usize,
    stabs: &[(usize, PauliString)],
    mut fill: impl FnMut(usize) -> PauliLetter,
) -> Vec<PauliLetter> {
    let mut letters = vec![PauliLetter::I; n * copies];
    for (q, &letter) in obs.letters().iter().enumerate() {
        letters[l * n + q] = letter;
    }
    for (j, s) in stabs {
        for q in 0..n {
            let letter = s.letter(q);
            letters[j * n + q] = if letter.is_identity() {
                fill(j * n + q)
            } else {
                letter
            };
        }
    }
    letters
}

/// Splits an ideal-frame distribution into the probability that every
/// tested block passes its stabilizer and the conditional distribution of
/// the encoded block's readout.
pub(crate) fn accept_split(
    n: usize,
    copies: usize,
    l: usize,
    stabs: &[(usize, PauliString)],
    dist: &[f64],
) -> (f64, Vec<f64>) {
    let total = n * copies;
    let mut p_acc = 0.0;
    let mut cond = vec![0.0; 1 << n];
    'outer: for (b, &p) in dist.iter().enumerate() {
        debug_assert!(b < (1 << total));
        for (j, s) in stabs {
            if !stabilizer_passes(s, block_bits(b, *j, n, copies), n) {
                continue 'outer;
            }
        }
        p_acc += p;
        cond[block_bits(b, l, n, copies)] += p;
    }
    if p_acc > 0.0 {
        for c in cond.iter_mut() {
            *c /= p_acc;
        }
    }
    (p_acc, cond)
}

/// U^(l): the phase encoding on block l, identity elsewhere.
pub(crate) fn encoding_unitary(theta: f64, n: usize, copies: usize, l: usize) -> DMatrix<C64> {
    let u_block = PhaseEncoding::new(theta, n).unitary();
    let front = DMatrix::<C64>::identity(1 << (l * n), 1 << (l * n));
    let back_dim = 1 << ((copies - 1 - l) * n);
    let back = DMatrix::<C64>::identity(back_dim, back_dim);
    front.kronecker(&u_block).kronecker(&back)
}

/// All stabilizer assignments for the tested blocks (every block except
/// `l` draws independently from the whole group, identity included).
pub(crate) fn enumerate_stab_assignments(
    group: &StabilizerGroup,
    copies: usize,
    l: usize,
) -> Vec<Vec<(usize, PauliString)>> {
    let tested: Vec<usize> = (0..copies).filter(|&j| j != l).collect();
    tested
        .iter()
        .map(|_| group.elements().iter().cloned())
        .multi_cartesian_product()
        .map(|choice| tested.iter().copied().zip(choice).collect())
        .collect()
}

/// Sanity guard for requested states: every generator must stabilize it.
pub(crate) fn verify_stabilized(
    state: &crate::linalg::DensityOperator,
    group: &StabilizerGroup,
) -> Result<()> {
    for g in group.generators() {
        let val = state.expectation(&g.matrix())?;
        if (val.re - 1.0).abs() > 1e-9 || val.im.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "requested state is not stabilized by {g} (expectation {})",
                val.re
            )));
        }
    }
    Ok(())
}
