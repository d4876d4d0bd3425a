mod common;

use blindcal::qcore::{
    apply_unitary, bell_measurement, bell_state, fidelity, measure_pauli, pauli_expectation,
    rot_unitary, trace_distance, BellIndex, DensityMatrix, Pauli, PauliString, Unitary,
};
use common::{is_physical, max_diff, random_pure, random_state, random_unitary, rng};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const TOL: f64 = 1e-9;

fn to_dmatrix(rho: &DensityMatrix) -> DMatrix<Complex64> {
    let d = rho.dim();
    DMatrix::from_fn(d, d, |r, c| rho.get(r, c))
}

/// Dense `n`-qubit embedding of `u` on `targets`, built entry by entry.
fn embed(u: &Unitary, targets: &[usize], n: usize) -> DMatrix<Complex64> {
    let d = 1 << n;
    let local = |i: usize| {
        targets
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
    };
    let mask: usize = targets.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    DMatrix::from_fn(d, d, |i, j| {
        if i & !mask == j & !mask {
            u.get(local(i), local(j))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn distinct_targets<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut q: Vec<usize> = (0..n).collect();
    q.shuffle(rng);
    q.truncate(k);
    q
}

/// Closed-form single-qubit fidelity `Tr(ρσ) + 2√(det ρ det σ)`.
fn qubit_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    // a pure state's determinant is rounding residue, amplified by the square root
    let det = |m: &DensityMatrix| {
        let d = (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)).re;
        if d < 1e-14 {
            0.0
        } else {
            d
        }
    };
    let overlap: Complex64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j) * b.get(j, i))
        .sum();
    overlap.re + 2.0 * (det(a) * det(b)).sqrt()
}

fn bloch(m: &DensityMatrix) -> [f64; 3] {
    [
        2.0 * m.get(0, 1).re,
        -2.0 * m.get(0, 1).im,
        (m.get(0, 0) - m.get(1, 1)).re,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitary_action_preserves_trace_and_hermiticity(seed: u64, n in 1usize..=3, k in 1usize..=2) {
        let mut r = rng(seed);
        let k = k.min(n);
        let rho = random_state(n, &mut r);
        let u = random_unitary(k, &mut r);
        let targets = distinct_targets(n, k, &mut r);
        let out = apply_unitary(&rho, &u, &targets).unwrap();
        prop_assert!(is_physical(&out, TOL));
    }

    #[test]
    fn unitary_action_matches_dense_embedding(seed: u64, n in 1usize..=3, k in 1usize..=2) {
        let mut r = rng(seed);
        let k = k.min(n);
        let rho = random_state(n, &mut r);
        let u = random_unitary(k, &mut r);
        let targets = distinct_targets(n, k, &mut r);
        let out = apply_unitary(&rho, &u, &targets).unwrap();
        let full = embed(&u, &targets, n);
        let expected = &full * to_dmatrix(&rho) * full.adjoint();
        let d = rho.dim();
        for i in 0..d {
            for j in 0..d {
                prop_assert!((out.get(i, j) - expected[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_then_dagger_restores(seed: u64, n in 1usize..=3, k in 1usize..=2) {
        let mut r = rng(seed);
        let k = k.min(n);
        let rho = random_state(n, &mut r);
        let u = random_unitary(k, &mut r);
        let targets = distinct_targets(n, k, &mut r);
        let back = apply_unitary(&apply_unitary(&rho, &u, &targets).unwrap(), &u.dagger(), &targets).unwrap();
        prop_assert!(max_diff(&back, &rho) < TOL);
    }

    #[test]
    fn fuchs_van_de_graaf_sandwich(seed: u64, n in 1usize..=3) {
        let mut r = rng(seed);
        let (a, b) = (random_state(n, &mut r), random_state(n, &mut r));
        let f = fidelity(&a, &b).unwrap();
        let t = trace_distance(&a, &b).unwrap();
        prop_assert!(1.0 - f.sqrt() <= t + 1e-6, "F={f} T={t}");
        prop_assert!(t <= (1.0 - f).sqrt() + 1e-6, "F={f} T={t}");
    }

    #[test]
    fn qubit_fidelity_matches_closed_form(seed: u64) {
        let mut r = rng(seed);
        let (a, b) = (random_state(1, &mut r), random_state(1, &mut r));
        prop_assert!((fidelity(&a, &b).unwrap() - qubit_fidelity(&a, &b)).abs() < 1e-8);
    }

    #[test]
    fn qubit_trace_distance_is_half_bloch_distance(seed: u64) {
        let mut r = rng(seed);
        let (a, b) = (random_state(1, &mut r), random_state(1, &mut r));
        let (ra, rb) = (bloch(&a), bloch(&b));
        let half = 0.5 * ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((trace_distance(&a, &b).unwrap() - half).abs() < 1e-10);
    }

    #[test]
    fn pure_fidelity_is_overlap(seed: u64, n in 1usize..=3) {
        let mut r = rng(seed);
        let (a, b) = (random_pure(n, &mut r), random_pure(n, &mut r));
        let overlap = (to_dmatrix(&a) * to_dmatrix(&b)).trace().re;
        prop_assert!((fidelity(&a, &b).unwrap() - overlap).abs() < 1e-10);
    }

    #[test]
    fn kron_and_partial_trace_round_trip(seed: u64, na in 1usize..=2, nb in 1usize..=2) {
        let mut r = rng(seed);
        let (a, b) = (random_state(na, &mut r), random_state(nb, &mut r));
        let ab = a.kron(&b).unwrap();
        prop_assert!(is_physical(&ab, TOL));
        let keep_a: Vec<usize> = (0..na).collect();
        let keep_b: Vec<usize> = (na..na + nb).collect();
        prop_assert!(max_diff(&ab.partial_trace(&keep_a).unwrap(), &a) < TOL);
        prop_assert!(max_diff(&ab.partial_trace(&keep_b).unwrap(), &b) < TOL);
    }

    #[test]
    fn rotation_inverse_reverses_angles(a in -3.2f64..3.2, b in -3.2f64..3.2, c in -3.2f64..3.2) {
        let u = rot_unitary(a, b, c);
        prop_assert!(u.unitarity_deviation() < 1e-12);
        let id = u.mul(&rot_unitary(-c, -b, -a)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((id.get(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_expectations_are_bounded(seed: u64, n in 1usize..=3, idx in 0usize..64) {
        let mut r = rng(seed);
        let rho = random_state(n, &mut r);
        let p = PauliString::from_index(n, idx % (1 << (2 * n)));
        let e = pauli_expectation(&rho, &p).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-12);
        if p.is_identity() {
            prop_assert!((e - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn sampled_pauli_means_agree_with_expectations() {
    let shots = 100_000;
    let mut r = rng(2024);
    for n in [1usize, 2] {
        for _ in 0..4 {
            let rho = random_state(n, &mut r);
            for _ in 0..3 {
                let letters: Vec<Pauli> = (0..n)
                    .map(|_| [Pauli::X, Pauli::Y, Pauli::Z][r.random_range(0..3)])
                    .collect();
                let basis = PauliString::new(letters);
                let exact = pauli_expectation(&rho, &basis).unwrap();
                let mean = (0..shots)
                    .map(|_| {
                        measure_pauli(&rho, &basis, &mut r)
                            .unwrap()
                            .iter()
                            .map(|&o| o as f64)
                            .product::<f64>()
                    })
                    .sum::<f64>()
                    / shots as f64;
                let sigma = ((1.0 - exact * exact) / shots as f64).sqrt().max(1e-6);
                assert!(
                    (mean - exact).abs() <= 3.0 * sigma,
                    "{basis:?}: {mean} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn bell_measurement_is_a_point_mass_on_each_bell_state() {
    let mut r = rng(5);
    for b in BellIndex::ALL {
        let state = bell_state(b);
        for _ in 0..500 {
            assert_eq!(bell_measurement(&state, 0, 1, &mut r).unwrap().0, b);
        }
    }
}
