//! Pauli-basis tomography: random basis choice, expectation estimation from
//! measurement records and linear-inversion reconstruction.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qcore::{pauli_expectation, DensityMatrix, Pauli, PauliString};

/// One receiver-side measurement: which transmission, which product basis,
/// and the ±1 outcome per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub transmission_index: u32,
    pub basis: PauliString,
    pub outcomes: Vec<i8>,
}

impl MeasurementRecord {
    pub fn new(transmission_index: u32, basis: PauliString, outcomes: Vec<i8>) -> Result<Self> {
        if basis.len() != outcomes.len() {
            return Err(Error::LengthMismatch {
                left: basis.len(),
                right: outcomes.len(),
            });
        }
        if basis.has_identity() {
            return Err(Error::IdentityInBasis);
        }
        if outcomes.iter().any(|&o| o != 1 && o != -1) {
            return Err(Error::InvalidConfig("outcomes must be +1 or -1".into()));
        }
        Ok(Self {
            transmission_index,
            basis,
            outcomes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.basis.len()
    }
}

/// Independent uniform choice of X, Y or Z per qubit.
pub fn sample_basis<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PauliString {
    PauliString::new(
        (0..n_qubits)
            .map(|_| Pauli::MEASUREMENT_BASES[rng.random_range(0..3)])
            .collect(),
    )
}

/// Running estimates of every Pauli-string expectation.
///
/// A record in basis `b` contributes to each string that agrees with `b` on
/// its non-identity positions, using the product of the outcomes there.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTable {
    n_qubits: usize,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl ExpectationTable {
    pub fn new(n_qubits: usize) -> Self {
        let size = 1usize << (2 * n_qubits);
        Self {
            n_qubits,
            sums: vec![0.0; size],
            counts: vec![0; size],
        }
    }

    /// Exact expectations of `rho`, one shot-equivalent per string.
    pub fn exact(rho: &DensityMatrix) -> Self {
        let mut table = Self::new(rho.n_qubits());
        for p in PauliString::all(rho.n_qubits()).skip(1) {
            let i = p.index();
            table.sums[i] = pauli_expectation(rho, &p).expect("lengths agree");
            table.counts[i] = 1;
        }
        table
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add(&mut self, record: &MeasurementRecord) -> Result<()> {
        let n = self.n_qubits;
        if record.n_qubits() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: record.n_qubits(),
            });
        }
        let digits: Vec<usize> = record.basis.letters().iter().map(|p| p.digit()).collect();
        // every subset of positions kept as non-identity
        for mask in 1usize..(1 << n) {
            let mut index = 0usize;
            let mut product = 1i32;
            for (q, (&digit, &outcome)) in digits.iter().zip(&record.outcomes).enumerate() {
                index *= 4;
                if (mask >> (n - 1 - q)) & 1 == 1 {
                    index += digit;
                    product *= outcome as i32;
                }
            }
            self.sums[index] += product as f64;
            self.counts[index] += 1;
        }
        Ok(())
    }

    /// Combines two partial tables built from disjoint record sets.
    pub fn merge(&mut self, other: &ExpectationTable) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::LengthMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `(estimate, shot_count)`, or `None` when no compatible record exists.
    /// The all-identity string is always `(1.0, u64::MAX)`.
    pub fn get(&self, p: &PauliString) -> Option<(f64, u64)> {
        if p.len() != self.n_qubits {
            return None;
        }
        if p.is_identity() {
            return Some((1.0, u64::MAX));
        }
        let i = p.index();
        (self.counts[i] > 0).then(|| {
            (
                (self.sums[i] / self.counts[i] as f64).clamp(-1.0, 1.0),
                self.counts[i],
            )
        })
    }

    /// Strings with no compatible record; these reconstruct as zero.
    pub fn missing(&self) -> usize {
        self.counts.iter().skip(1).filter(|&&c| c == 0).count()
    }

    /// Non-identity strings with at least one record.
    pub fn entries(&self) -> impl Iterator<Item = (PauliString, f64, u64)> + '_ {
        (1..self.sums.len())
            .filter(|&i| self.counts[i] > 0)
            .map(move |i| {
                (
                    PauliString::from_index(self.n_qubits, i),
                    (self.sums[i] / self.counts[i] as f64).clamp(-1.0, 1.0),
                    self.counts[i],
                )
            })
    }
}

/// Builds a table from records of equal register size.
pub fn accumulate(records: &[MeasurementRecord]) -> Result<ExpectationTable> {
    let first = records.first().ok_or(Error::Empty("measurement records"))?;
    let mut table = ExpectationTable::new(first.n_qubits());
    for r in records {
        table.add(r)?;
    }
    Ok(table)
}

/// Linear inversion `(1/2^n) Σ_s e_s P_s`, followed by [`project_to_physical`].
pub fn reconstruct(table: &ExpectationTable, n_qubits: usize) -> Result<DensityMatrix> {
    if table.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch {
            expected: n_qubits,
            found: table.n_qubits(),
        });
    }
    let raw = linear_inversion(table)?;
    project_to_physical(raw)
}

/// Unprojected linear-inversion estimate (Hermitian, trace one).
pub fn linear_inversion(table: &ExpectationTable) -> Result<RawEstimate> {
    let n = table.n_qubits();
    let d = 1usize << n;
    let scale = 1.0 / d as f64;
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        data[i * d + i] = Complex64::new(scale, 0.0);
    }
    for (p, est, _) in table.entries() {
        if est == 0.0 {
            continue;
        }
        for r in 0..d {
            let (c, v) = p.row_entry(r);
            data[r * d + c] += v * (est * scale);
        }
    }
    RawEstimate::new(n, data)
}

/// A Hermitian matrix that may have negative eigenvalues.
#[derive(Debug, Clone)]
pub struct RawEstimate {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl RawEstimate {
    /// Wraps a row-major matrix, checking Hermiticity within 1e-9.
    pub fn new(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        let d = 1usize << n_qubits;
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: data.len(),
            });
        }
        for r in 0..d {
            for c in r..d {
                if (data[r * d + c] - data[c * d + r].conj()).norm() > 1e-9 {
                    return Err(Error::InvalidState("input is not Hermitian".into()));
                }
            }
        }
        Ok(Self { n_qubits, data })
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: d,
            });
        }
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for (i, v) in values.iter().enumerate() {
            data[i * d + i] = Complex64::new(*v, 0.0);
        }
        Self::new(d.trailing_zeros() as usize, data)
    }
}

impl From<DensityMatrix> for RawEstimate {
    fn from(rho: DensityMatrix) -> Self {
        Self {
            n_qubits: rho.n_qubits(),
            data: rho.as_slice().to_vec(),
        }
    }
}

/// Clips negative eigenvalues to zero and renormalizes to unit trace.
/// Already-physical input is returned as-is (trace-normalized).
pub fn project_to_physical(raw: impl Into<RawEstimate>) -> Result<DensityMatrix> {
    let raw = raw.into();
    let d = 1usize << raw.n_qubits;
    let eig = crate::qcore::hermitian_eigen(&raw.data, d);
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let clipped_sum: f64 = vals.iter().map(|l| l.max(0.0)).sum();
    if clipped_sum <= 1e-300 {
        return Err(Error::ZeroTrace);
    }
    if min >= 0.0 {
        let tr: f64 = (0..d).map(|i| raw.data[i * d + i].re).sum();
        let mut data = raw.data;
        for z in &mut data {
            *z /= tr;
        }
        hermitize(&mut data, d);
        return DensityMatrix::from_raw(raw.n_qubits, data);
    }
    let v = &eig.eigenvectors;
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for (k, l) in vals.iter().enumerate() {
        let w = l.max(0.0) / clipped_sum;
        if w == 0.0 {
            continue;
        }
        for r in 0..d {
            let a = v[(r, k)] * w;
            for c in 0..d {
                data[r * d + c] += a * v[(c, k)].conj();
            }
        }
    }
    hermitize(&mut data, d);
    DensityMatrix::from_raw(raw.n_qubits, data)
}

fn hermitize(data: &mut [Complex64], d: usize) {
    for r in 0..d {
        data[r * d + r].im = 0.0;
        for c in (r + 1)..d {
            let avg = (data[r * d + c] + data[c * d + r].conj()) * 0.5;
            data[r * d + c] = avg;
            data[c * d + r] = avg.conj();
        }
    }
}
