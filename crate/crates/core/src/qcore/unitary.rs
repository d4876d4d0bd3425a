use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::state::DensityMatrix;
use super::MAX_QUBITS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A unitary on `n_qubits`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    /// Builds a unitary, checking `U U† = I` within 1e-9.
    pub fn new(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        let u = Self::from_raw(n_qubits, data)?;
        let dev = u.unitarity_deviation();
        if dev > 1e-9 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::UnsupportedQubitCount(n_qubits));
        }
        let dim = 1 << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { n_qubits, data })
    }

    fn from_2x2(m: [[Complex64; 2]; 2]) -> Self {
        Self {
            n_qubits: 1,
            data: vec![m[0][0], m[0][1], m[1][0], m[1][1]],
        }
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self::from_raw(n_qubits, data)
    }

    pub fn pauli_x() -> Self {
        Self::from_2x2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::from_2x2([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_2x2([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_2x2([[h, h], [h, -h]])
    }

    /// Phase gate `diag(1, i)`.
    pub fn phase_s() -> Self {
        Self::from_2x2([[ONE, ZERO], [ZERO, I]])
    }

    /// CNOT with the first qubit as control.
    pub fn cnot() -> Self {
        let mut data = vec![ZERO; 16];
        data[0] = ONE;
        data[5] = ONE;
        data[11] = ONE;
        data[14] = ONE;
        Self { n_qubits: 2, data }
    }

    /// `RZ(t) = diag(e^{-it/2}, e^{+it/2})`.
    pub fn rz(t: f64) -> Self {
        let t = t.rem_euclid(2.0 * TAU);
        Self::from_2x2([
            [Complex64::from_polar(1.0, -t / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, t / 2.0)],
        ])
    }

    /// `RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]`.
    pub fn ry(t: f64) -> Self {
        let t = t.rem_euclid(2.0 * TAU);
        let (s, c) = (t / 2.0).sin_cos();
        Self::from_2x2([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Self {
            n_qubits: self.n_qubits,
            data,
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Unitary) -> Result<Self> {
        if self.n_qubits != rhs.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: rhs.n_qubits,
            });
        }
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    data[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            data,
        })
    }

    /// Tensor product `self ⊗ rhs` (self on the leftmost qubits).
    pub fn kron(&self, rhs: &Unitary) -> Result<Self> {
        let n = self.n_qubits + rhs.n_qubits;
        let (da, db) = (self.dim(), rhs.dim());
        let d = da * db;
        let mut data = vec![ZERO; d * d];
        for ar in 0..da {
            for ac in 0..da {
                let a = self.data[ar * da + ac];
                for br in 0..db {
                    for bc in 0..db {
                        data[(ar * db + br) * d + ac * db + bc] = a * rhs.data[br * db + bc];
                    }
                }
            }
        }
        Self::from_raw(n, data)
    }

    /// Max-abs entry of `U U† - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.data[r * d + k] * self.data[c * d + k].conj();
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// Single-qubit rotation `RZ(gamma) · RY(beta) · RZ(alpha)`.
pub fn rot_unitary(alpha: f64, beta: f64, gamma: f64) -> Unitary {
    let ry_rz = Unitary::ry(beta)
        .mul(&Unitary::rz(alpha))
        .expect("single-qubit shapes agree");
    Unitary::rz(gamma)
        .mul(&ry_rz)
        .expect("single-qubit shapes agree")
}

pub(crate) fn check_targets(n_qubits: usize, targets: &[usize]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: t, n_qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateTarget);
        }
    }
    Ok(())
}

/// Returns `Ũ ρ Ũ†`, with `u` embedded on `targets` (first target is the
/// most significant local qubit).
pub fn apply_unitary(rho: &DensityMatrix, u: &Unitary, targets: &[usize]) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    apply_unitary_in_place(&mut out, u, targets)?;
    Ok(out)
}

pub(crate) fn apply_unitary_in_place(
    rho: &mut DensityMatrix,
    u: &Unitary,
    targets: &[usize],
) -> Result<()> {
    let n = rho.n_qubits();
    if u.n_qubits() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            found: u.n_qubits(),
        });
    }
    check_targets(n, targets)?;
    if targets.len() == 1 {
        apply_1q(rho.data_mut(), n, u.as_slice(), targets[0]);
        return Ok(());
    }

    let dim = 1usize << n;
    let k = targets.len();
    let local = 1usize << k;
    let groups = local_index_groups(n, targets);
    let data = rho.data_mut();
    let mut buf = vec![ZERO; local];

    // left multiply: columns
    for c in 0..dim {
        for idx in &groups {
            for (a, slot) in buf.iter_mut().enumerate() {
                let mut acc = ZERO;
                for b in 0..local {
                    acc += u.data[a * local + b] * data[idx[b] * dim + c];
                }
                *slot = acc;
            }
            for (&i, &v) in idx.iter().zip(&buf) {
                data[i * dim + c] = v;
            }
        }
    }
    // right multiply by U†: rows
    for r in 0..dim {
        for idx in &groups {
            for (a, slot) in buf.iter_mut().enumerate() {
                let mut acc = ZERO;
                for b in 0..local {
                    acc += data[r * dim + idx[b]] * u.data[a * local + b].conj();
                }
                *slot = acc;
            }
            for (&i, &v) in idx.iter().zip(&buf) {
                data[r * dim + i] = v;
            }
        }
    }
    Ok(())
}

/// For each assignment of the non-target qubits, the full indices of the
/// `2^k` local basis states in local order.
fn local_index_groups(n: usize, targets: &[usize]) -> Vec<Vec<usize>> {
    let k = targets.len();
    let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let mut groups = Vec::with_capacity(1 << rest.len());
    for r in 0..(1usize << rest.len()) {
        let mut base = 0usize;
        for (j, &q) in rest.iter().enumerate() {
            if (r >> (rest.len() - 1 - j)) & 1 == 1 {
                base |= 1 << (n - 1 - q);
            }
        }
        let idx = (0..(1usize << k))
            .map(|a| {
                let mut full = base;
                for (j, &q) in targets.iter().enumerate() {
                    if (a >> (k - 1 - j)) & 1 == 1 {
                        full |= 1 << (n - 1 - q);
                    }
                }
                full
            })
            .collect();
        groups.push(idx);
    }
    groups
}

/// In-place `U ρ U†` for a 2x2 `u` on qubit `q` of row-major `data`.
pub(crate) fn apply_1q(data: &mut [Complex64], n: usize, u: &[Complex64], q: usize) {
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - q);
    let (u00, u01, u10, u11) = (u[0], u[1], u[2], u[3]);
    for r0 in (0..dim).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for c in 0..dim {
            let a = data[r0 * dim + c];
            let b = data[r1 * dim + c];
            data[r0 * dim + c] = u00 * a + u01 * b;
            data[r1 * dim + c] = u10 * a + u11 * b;
        }
    }
    let (v00, v01, v10, v11) = (u00.conj(), u01.conj(), u10.conj(), u11.conj());
    for r in 0..dim {
        let row = &mut data[r * dim..(r + 1) * dim];
        for c0 in (0..dim).filter(|c| c & bit == 0) {
            let c1 = c0 | bit;
            let a = row[c0];
            let b = row[c1];
            row[c0] = a * v00 + b * v01;
            row[c1] = a * v10 + b * v11;
        }
    }
}
