use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::state::{hermitian_eigen, DensityMatrix, STATE_TOL};

const PURE_TOL: f64 = 1e-12;

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clipped to `[0, 1]`.
///
/// When either argument is pure this reduces to `Tr(ρσ)`, which is used as a
/// fast path.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_shape(sigma)?;
    if rho.purity() > 1.0 - PURE_TOL || sigma.purity() > 1.0 - PURE_TOL {
        return Ok(rho.overlap(sigma)?.clamp(0.0, 1.0));
    }
    let d = rho.dim();
    let eig = hermitian_eigen(rho.as_slice(), d);
    check_psd(eig.eigenvalues.iter().copied())?;
    let sqrt_vals = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let sqrt_rho =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let inner = &sqrt_rho * sigma.to_dmatrix() * &sqrt_rho;
    let inner_flat: Vec<Complex64> = inner.transpose().iter().copied().collect();
    let vals = hermitian_eigen(&inner_flat, d).eigenvalues;
    check_psd(vals.iter().copied())?;
    let root_sum: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

fn check_psd(vals: impl Iterator<Item = f64>) -> Result<()> {
    for l in vals {
        if l < -1e3 * STATE_TOL {
            return Err(Error::InvalidState(format!("eigenvalue {l:e} < 0")));
        }
    }
    Ok(())
}

/// `1 - F(ρ, σ)`.
pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - fidelity(rho, sigma)?)
}

/// `½ Σ |λ_i|` over eigenvalues of `ρ - σ`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_shape(sigma)?;
    let diff: Vec<Complex64> = rho
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let vals = hermitian_eigen(&diff, rho.dim()).eigenvalues;
    Ok((0.5 * vals.iter().map(|l| l.abs()).sum::<f64>()).clamp(0.0, 1.0))
}
