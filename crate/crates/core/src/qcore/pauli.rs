use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

use super::state::DensityMatrix;
use super::unitary::{apply_1q, Unitary};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const MEASUREMENT_BASES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Base-4 digit: I=0, X=1, Y=2, Z=3.
    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn from_digit(d: usize) -> Option<Self> {
        match d {
            0 => Some(Pauli::I),
            1 => Some(Pauli::X),
            2 => Some(Pauli::Y),
            3 => Some(Pauli::Z),
            _ => None,
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Matrix element `<row|σ|col>` for single-qubit bits, given `row = col ^ flips`.
    fn element(self, row_bit: usize) -> Complex64 {
        match (self, row_bit) {
            (Pauli::I, _) | (Pauli::X, _) => ONE,
            (Pauli::Y, 0) => -I,
            (Pauli::Y, _) => I,
            (Pauli::Z, 0) => ONE,
            (Pauli::Z, _) => -ONE,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn has_identity(&self) -> bool {
        self.letters.contains(&Pauli::I)
    }

    /// Base-4 index with qubit 0 as the most significant digit.
    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, p| acc * 4 + p.digit())
    }

    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut letters = vec![Pauli::I; n];
        for slot in letters.iter_mut().rev() {
            *slot = Pauli::from_digit(index % 4).expect("digit < 4");
            index /= 4;
        }
        Self { letters }
    }

    /// All `4^n` strings in index order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..(1usize << (2 * n))).map(move |i| Self::from_index(n, i))
    }

    /// Bit mask of qubits on which the string flips the basis state.
    pub(crate) fn flip_mask(&self) -> usize {
        let n = self.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
    }

    /// Nonzero entry of row `row`: `(column, value)`.
    pub(crate) fn row_entry(&self, row: usize) -> (usize, Complex64) {
        let n = self.len();
        let col = row ^ self.flip_mask();
        let mut val = ONE;
        for (q, p) in self.letters.iter().enumerate() {
            let bit = (row >> (n - 1 - q)) & 1;
            val *= p.element(bit);
        }
        (col, val)
    }

    /// Dense matrix of the string.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let d = 1usize << self.len();
        let mut out = vec![ZERO; d * d];
        for r in 0..d {
            let (c, v) = self.row_entry(r);
            out[r * d + c] = v;
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidConfig(format!("bad Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters })
    }
}

/// `Tr(P ρ)`.
pub fn pauli_expectation(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    if p.len() != rho.n_qubits() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: rho.n_qubits(),
        });
    }
    if p.is_identity() {
        return Ok(1.0);
    }
    let d = rho.dim();
    let mut acc = ZERO;
    for r in 0..d {
        let (c, v) = p.row_entry(r);
        acc += v * rho.get(c, r);
    }
    Ok(acc.re.clamp(-1.0, 1.0))
}

/// Rotation taking the eigenbasis of `p` onto the computational basis,
/// with the +1 eigenvector mapped to `|0>`.
pub(crate) fn basis_change(p: Pauli) -> Option<Unitary> {
    match p {
        Pauli::I => None,
        Pauli::Z => None,
        Pauli::X => Some(Unitary::hadamard()),
        // H·S† maps |+i> to |0>
        Pauli::Y => Some(
            Unitary::hadamard()
                .mul(&Unitary::phase_s().dagger())
                .expect("single-qubit"),
        ),
    }
}

/// Born distribution over outcome indices for a product Pauli basis.
pub(crate) fn outcome_distribution(rho: &DensityMatrix, basis: &PauliString) -> Result<Vec<f64>> {
    if basis.len() != rho.n_qubits() {
        return Err(Error::LengthMismatch {
            left: basis.len(),
            right: rho.n_qubits(),
        });
    }
    if basis.has_identity() {
        return Err(Error::IdentityInBasis);
    }
    let n = rho.n_qubits();
    let mut work = rho.clone();
    for (q, &p) in basis.letters().iter().enumerate() {
        if let Some(u) = basis_change(p) {
            apply_1q(work.data_mut(), n, u.as_slice(), q);
        }
    }
    Ok(work.diagonal().into_iter().map(|x| x.max(0.0)).collect())
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    // round-off: last index with positive weight
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

pub(crate) fn index_to_outcomes(index: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|q| {
            if (index >> (n - 1 - q)) & 1 == 0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Projective measurement in the product eigenbasis of `basis`; returns
/// one ±1 outcome per qubit.
pub fn measure_pauli<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    basis: &PauliString,
    rng: &mut R,
) -> Result<Vec<i8>> {
    let probs = outcome_distribution(rho, basis)?;
    let idx = sample_index(&probs, rng);
    Ok(index_to_outcomes(idx, basis.len()))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::qcore::bell::BellIndex;
    use crate::qcore::state::bell_state;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn expectation_basics() {
        let zero = DensityMatrix::computational(&[0]).unwrap();
        assert_eq!(pauli_expectation(&zero, &ps("Z")).unwrap(), 1.0);
        let plus = DensityMatrix::from_pure(&[ONE, ONE]).unwrap();
        assert!((pauli_expectation(&plus, &ps("X")).unwrap() - 1.0).abs() < 1e-12);
        let bell = bell_state(BellIndex::PHI_PLUS);
        assert!((pauli_expectation(&bell, &ps("XX")).unwrap() - 1.0).abs() < 1e-12);
        assert!((pauli_expectation(&bell, &ps("YY")).unwrap() + 1.0).abs() < 1e-12);
        assert!((pauli_expectation(&bell, &ps("ZZ")).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pauli_expectation(&bell, &ps("II")).unwrap(), 1.0);
    }

    #[test]
    fn expectation_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = crate::qcore::state::random_pure_qubit(&mut rng);
        let b = crate::qcore::state::random_pure_qubit(&mut rng);
        let rho = a.kron(&b).unwrap();
        for p in PauliString::all(2) {
            let m = p.to_matrix();
            let mut tr = ZERO;
            for r in 0..4 {
                for k in 0..4 {
                    tr += m[r * 4 + k] * rho.get(k, r);
                }
            }
            assert!((pauli_expectation(&rho, &p).unwrap() - tr.re).abs() < 1e-12);
            assert!(tr.im.abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch() {
        let zero = DensityMatrix::computational(&[0]).unwrap();
        assert!(matches!(
            pauli_expectation(&zero, &ps("ZZ")),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn index_round_trip() {
        for i in 0..64 {
            assert_eq!(PauliString::from_index(3, i).index(), i);
        }
        assert_eq!(ps("XZ").to_string(), "XZ");
    }

    #[test]
    fn measure_rejects_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = DensityMatrix::computational(&[0, 0]).unwrap();
        assert_eq!(
            measure_pauli(&zero, &ps("ZI"), &mut rng),
            Err(Error::IdentityInBasis)
        );
    }

    #[test]
    fn measure_zero_in_z_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = DensityMatrix::computational(&[0]).unwrap();
        for _ in 0..1000 {
            assert_eq!(measure_pauli(&zero, &ps("Z"), &mut rng).unwrap(), vec![1]);
        }
    }

    #[test]
    fn measure_zero_in_x_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = DensityMatrix::computational(&[0]).unwrap();
        let n = 100_000;
        let plus = (0..n)
            .filter(|_| measure_pauli(&zero, &ps("X"), &mut rng).unwrap()[0] == 1)
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((plus as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn bell_zz_outcomes_correlated() {
        // Born oracle: Φ⁺ only populates |00> and |11>
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bell = bell_state(BellIndex::PHI_PLUS);
        let probs = outcome_distribution(&bell, &ps("ZZ")).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-12 && (probs[3] - 0.5).abs() < 1e-12);
        for _ in 0..1000 {
            let o = measure_pauli(&bell, &ps("ZZ"), &mut rng).unwrap();
            assert_eq!(o[0] * o[1], 1);
        }
    }

    #[test]
    fn y_basis_maps_plus_i() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plus_i = DensityMatrix::from_pure(&[ONE, I]).unwrap();
        for _ in 0..100 {
            assert_eq!(measure_pauli(&plus_i, &ps("Y"), &mut rng).unwrap(), vec![1]);
        }
    }
}
