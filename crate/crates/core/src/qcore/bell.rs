use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

use super::pauli::sample_index;
use super::state::DensityMatrix;
use super::unitary::{apply_1q, apply_unitary_in_place, check_targets, Unitary};

/// Bell-basis label `(b1, b2)`: `b1` is the phase bit, `b2` the parity bit.
///
/// Φ⁺=(0,0), Ψ⁺=(0,1), Φ⁻=(1,0), Ψ⁻=(1,1), fixed by the CNOT-then-H
/// inversion circuit used in [`bell_measurement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellIndex {
    bits: (u8, u8),
}

impl BellIndex {
    pub const PHI_PLUS: BellIndex = BellIndex { bits: (0, 0) };
    pub const PSI_PLUS: BellIndex = BellIndex { bits: (0, 1) };
    pub const PHI_MINUS: BellIndex = BellIndex { bits: (1, 0) };
    pub const PSI_MINUS: BellIndex = BellIndex { bits: (1, 1) };
    pub const ALL: [BellIndex; 4] = [
        Self::PHI_PLUS,
        Self::PSI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_MINUS,
    ];

    pub fn new(b1: u8, b2: u8) -> Result<Self> {
        if b1 > 1 || b2 > 1 {
            return Err(Error::InvalidConfig(format!("bell bits ({b1},{b2})")));
        }
        Ok(Self { bits: (b1, b2) })
    }

    pub fn bits(self) -> (u8, u8) {
        self.bits
    }

    pub fn phase_bit(self) -> u8 {
        self.bits.0
    }

    pub fn parity_bit(self) -> u8 {
        self.bits.1
    }

    /// `2·b1 + b2`.
    pub fn ordinal(self) -> usize {
        (self.bits.0 as usize) * 2 + self.bits.1 as usize
    }

    pub fn from_ordinal(i: usize) -> Self {
        Self::ALL[i & 3]
    }
}

/// One branch of a Bell measurement: probability, label and the normalized
/// state of the untouched qubits (`None` when nothing remains).
#[derive(Debug, Clone)]
pub struct BellBranch {
    pub probability: f64,
    pub index: BellIndex,
    pub post_state: Option<DensityMatrix>,
}

fn disentangle(rho: &DensityMatrix, q1: usize, q2: usize) -> Result<DensityMatrix> {
    if q1 == q2 {
        return Err(Error::SameQubit);
    }
    check_targets(rho.n_qubits(), &[q1, q2])?;
    let mut work = rho.clone();
    apply_unitary_in_place(&mut work, &Unitary::cnot(), &[q1, q2])?;
    let n = work.n_qubits();
    apply_1q(work.data_mut(), n, Unitary::hadamard().as_slice(), q1);
    Ok(work)
}

fn outcome_weights(work: &DensityMatrix, q1: usize, q2: usize) -> [f64; 4] {
    let n = work.n_qubits();
    let mut w = [0.0; 4];
    for (i, p) in work.diagonal().into_iter().enumerate() {
        let b1 = (i >> (n - 1 - q1)) & 1;
        let b2 = (i >> (n - 1 - q2)) & 1;
        w[b1 * 2 + b2] += p.max(0.0);
    }
    w
}

fn project(
    work: &DensityMatrix,
    q1: usize,
    q2: usize,
    idx: BellIndex,
    prob: f64,
) -> Option<DensityMatrix> {
    let n = work.n_qubits();
    if n == 2 {
        return None;
    }
    let rest: Vec<usize> = (0..n).filter(|&q| q != q1 && q != q2).collect();
    let m = rest.len();
    let dm = 1usize << m;
    let d = work.dim();
    let (b1, b2) = idx.bits();
    let full = |local: usize| {
        let mut f = ((b1 as usize) << (n - 1 - q1)) | ((b2 as usize) << (n - 1 - q2));
        for (j, &q) in rest.iter().enumerate() {
            if (local >> (m - 1 - j)) & 1 == 1 {
                f |= 1 << (n - 1 - q);
            }
        }
        f
    };
    let map: Vec<usize> = (0..dm).map(full).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); dm * dm];
    for r in 0..dm {
        for c in 0..dm {
            data[r * dm + c] = work.as_slice()[map[r] * d + map[c]] / prob;
        }
    }
    Some(DensityMatrix::from_raw(m, data).expect("remaining register is within bounds"))
}

/// Exact Born probabilities of the four Bell outcomes on `(q1, q2)`.
pub fn bell_probabilities(rho: &DensityMatrix, q1: usize, q2: usize) -> Result<[f64; 4]> {
    let work = disentangle(rho, q1, q2)?;
    let w = outcome_weights(&work, q1, q2);
    let total: f64 = w.iter().sum();
    Ok(w.map(|x| x / total))
}

/// All nonzero-probability branches of a Bell measurement on `(q1, q2)`.
pub fn bell_branches(rho: &DensityMatrix, q1: usize, q2: usize) -> Result<Vec<BellBranch>> {
    let work = disentangle(rho, q1, q2)?;
    let w = outcome_weights(&work, q1, q2);
    let total: f64 = w.iter().sum();
    Ok(w.iter()
        .enumerate()
        .filter(|(_, &p)| p / total > 1e-15)
        .map(|(i, &p)| {
            let index = BellIndex::from_ordinal(i);
            BellBranch {
                probability: p / total,
                index,
                post_state: project(&work, q1, q2, index, p),
            }
        })
        .collect())
}

/// Bell-state measurement on `(q1, q2)`: CNOT(q1→q2), H(q1), then Z readout.
///
/// Returns the sampled label and the renormalized state of the remaining
/// qubits (in ascending qubit order), or `None` for a two-qubit input.
pub fn bell_measurement<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    q1: usize,
    q2: usize,
    rng: &mut R,
) -> Result<(BellIndex, Option<DensityMatrix>)> {
    let work = disentangle(rho, q1, q2)?;
    let w = outcome_weights(&work, q1, q2);
    let i = sample_index(&w, rng);
    let index = BellIndex::from_ordinal(i);
    Ok((index, project(&work, q1, q2, index, w[i])))
}
