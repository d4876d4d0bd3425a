use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

use super::bell::BellIndex;
use super::MAX_QUBITS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance for the trace, Hermiticity and positivity invariants.
pub const STATE_TOL: f64 = 1e-9;

/// A trace-one, Hermitian, positive semidefinite operator on `2^n` dimensions.
///
/// Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
/// basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Validates and wraps a row-major `2^n x 2^n` matrix.
    pub fn new(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        let rho = Self::from_raw(n_qubits, data)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { n_qubits, data })
    }

    /// `|psi><psi|` for a (not necessarily normalized) amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let psi: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        Ok(Self { n_qubits: n, data })
    }

    /// Computational basis state, one bit per qubit left to right.
    pub fn computational(bits: &[u8]) -> Result<Self> {
        check_qubits(bits.len())?;
        let dim = 1usize << bits.len();
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::InvalidState(format!("bit value {b}")));
            }
            index = (index << 1) | b as usize;
        }
        let mut data = vec![ZERO; dim * dim];
        data[index * dim + index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits: bits.len(),
            data,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { n_qubits, data })
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

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    /// `Tr(ρ σ)`, real part.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        let d = self.dim();
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                acc += (self.data[r * d + c] * other.data[c * d + r]).re;
            }
        }
        Ok(acc)
    }

    pub(crate) fn check_same_shape(&self, other: &DensityMatrix) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Largest element-wise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.data)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_eigen(&self.data, self.dim())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Checks the trace, Hermiticity and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = self.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("non-Hermitian by {herm:e}")));
        }
        let min = self.eigenvalues()[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("eigenvalue {min:e} < 0")));
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &DensityMatrix) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_qubits(n)?;
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut data = vec![ZERO; d * d];
        for ar in 0..da {
            for ac in 0..da {
                let a = self.data[ar * da + ac];
                if a == ZERO {
                    continue;
                }
                for br in 0..db {
                    for bc in 0..db {
                        data[(ar * db + br) * d + ac * db + bc] = a * other.data[br * db + bc];
                    }
                }
            }
        }
        Ok(Self { n_qubits: n, data })
    }

    /// Reduced state on `keep` (in the given order), tracing out the rest.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        super::unitary::check_targets(self.n_qubits, keep)?;
        let n = self.n_qubits;
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let dk = 1usize << k;
        let d = self.dim();
        let compose = |local: usize, env: usize| {
            let mut full = 0usize;
            for (j, &q) in keep.iter().enumerate() {
                if (local >> (k - 1 - j)) & 1 == 1 {
                    full |= 1 << (n - 1 - q);
                }
            }
            for (j, &q) in traced.iter().enumerate() {
                if (env >> (traced.len() - 1 - j)) & 1 == 1 {
                    full |= 1 << (n - 1 - q);
                }
            }
            full
        };
        let mut data = vec![ZERO; dk * dk];
        for env in 0..(1usize << traced.len()) {
            for r in 0..dk {
                let fr = compose(r, env);
                for c in 0..dk {
                    data[r * dk + c] += self.data[fr * d + compose(c, env)];
                }
            }
        }
        Self::from_raw(k, data)
    }
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::UnsupportedQubitCount(n))
    } else {
        Ok(())
    }
}

pub(crate) fn hermitian_eigen(
    data: &[Complex64],
    dim: usize,
) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    let mut m = DMatrix::from_row_slice(dim, dim, data);
    // symmetrize away round-off before the Hermitian solver
    let adj = m.adjoint();
    m = (m + adj) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(m)
}

/// Named states used across the scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum NamedState {
    Computational(Vec<u8>),
    Bell(BellIndex),
    Ghz(usize),
    W(usize),
    RandomPure,
    MaximallyMixed(usize),
}

/// Prepares `kind`; `rng` is only consumed by [`NamedState::RandomPure`].
pub fn prepare_named_state<R: Rng + ?Sized>(
    kind: &NamedState,
    rng: &mut R,
) -> Result<DensityMatrix> {
    match kind {
        NamedState::Computational(bits) => DensityMatrix::computational(bits),
        NamedState::Bell(idx) => Ok(bell_state(*idx)),
        NamedState::Ghz(n) => ghz_state(*n),
        NamedState::W(n) => w_state(*n),
        NamedState::RandomPure => Ok(random_pure_qubit(rng)),
        NamedState::MaximallyMixed(n) => DensityMatrix::maximally_mixed(*n),
    }
}

/// Bell state under the convention Φ⁺=(0,0), Ψ⁺=(0,1), Φ⁻=(1,0), Ψ⁻=(1,1).
pub fn bell_state(idx: BellIndex) -> DensityMatrix {
    let h = FRAC_1_SQRT_2;
    let sign = if idx.phase_bit() == 0 { 1.0 } else { -1.0 };
    let mut amps = [ZERO; 4];
    if idx.parity_bit() == 0 {
        amps[0] = Complex64::new(h, 0.0);
        amps[3] = Complex64::new(sign * h, 0.0);
    } else {
        amps[1] = Complex64::new(h, 0.0);
        amps[2] = Complex64::new(sign * h, 0.0);
    }
    DensityMatrix::from_pure(&amps).expect("four amplitudes")
}

pub fn ghz_state(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::UnsupportedQubitCount(n));
    }
    check_qubits(n)?;
    let dim = 1usize << n;
    let mut amps = vec![ZERO; dim];
    amps[0] = Complex64::new(1.0, 0.0);
    amps[dim - 1] = Complex64::new(1.0, 0.0);
    DensityMatrix::from_pure(&amps)
}

pub fn w_state(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::UnsupportedQubitCount(n));
    }
    check_qubits(n)?;
    let mut amps = vec![ZERO; 1 << n];
    for q in 0..n {
        amps[1 << (n - 1 - q)] = Complex64::new(1.0, 0.0);
    }
    DensityMatrix::from_pure(&amps)
}

/// Haar-random single-qubit pure state: uniform `cos θ` and azimuth.
pub fn random_pure_qubit<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let half = (cos_theta.clamp(-1.0, 1.0).acos()) / 2.0;
    let amps = [
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), phi),
    ];
    DensityMatrix::from_pure(&amps).expect("two amplitudes")
}

/// Single-qubit state from a Bloch vector with `|r| <= 1`.
pub fn from_bloch(r: [f64; 3]) -> Result<DensityMatrix> {
    let data = vec![
        Complex64::new((1.0 + r[2]) / 2.0, 0.0),
        Complex64::new(r[0] / 2.0, -r[1] / 2.0),
        Complex64::new(r[0] / 2.0, r[1] / 2.0),
        Complex64::new((1.0 - r[2]) / 2.0, 0.0),
    ];
    DensityMatrix::new(1, data)
}

/// Bloch vector of a single-qubit state.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let off = rho.get(1, 0);
    Ok([
        2.0 * off.re,
        2.0 * off.im,
        (rho.get(0, 0) - rho.get(1, 1)).re,
    ])
}
