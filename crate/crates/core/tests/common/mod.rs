//! Random states and unitaries for the property suites.
#![allow(dead_code)]

use blindcal::qcore::{DensityMatrix, Unitary};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random state of random rank; rank 1 gives a Haar-random pure state.
pub fn random_state<R: Rng>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let d = 1 << n_qubits;
    let rank = rng.random_range(1..=d);
    let g = ginibre(d, rank, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    let data: Vec<Complex64> = (0..d * d).map(|k| rho[(k / d, k % d)] / tr).collect();
    DensityMatrix::new(n_qubits, data).expect("Ginibre product is a state")
}

pub fn random_pure<R: Rng>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let d = 1 << n_qubits;
    let g = ginibre(d, 1, rng);
    let amps: Vec<Complex64> = g.iter().copied().collect();
    DensityMatrix::from_pure(&amps).expect("non-zero vector")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng>(n_qubits: usize, rng: &mut R) -> Unitary {
    let d = 1 << n_qubits;
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let phase = r[(j, j)] / r[(j, j)].norm();
            data.push(q[(i, j)] * phase);
        }
    }
    Unitary::new(n_qubits, data).expect("QR factor is unitary")
}

/// Largest entrywise modulus of `a - b`.
pub fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_physical(rho: &DensityMatrix, tol: f64) -> bool {
    (rho.trace().re - 1.0).abs() < tol
        && rho.trace().im.abs() < tol
        && rho.hermiticity_deviation() < tol
}
