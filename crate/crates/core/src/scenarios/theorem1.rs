use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{bloch_vector, from_bloch, measure_pauli, trace_distance, DensityMatrix};
use crate::seed::{child_seed, rng_from_seed};
use crate::tomography::{reconstruct, sample_basis, ExpectationTable, MeasurementRecord};

use super::{ResultRow, ScenarioResult};

/// Pure single-qubit state with the opposite Bloch vector.
pub fn antipodal_partner(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: rho.n_qubits(),
        });
    }
    if (rho.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure);
    }
    let r = bloch_vector(rho)?;
    from_bloch([-r[0], -r[1], -r[2]])
}

/// `s_p` followed by the antipodal partner of each state.
pub fn blinded_set(s_p: &[DensityMatrix]) -> Result<Vec<DensityMatrix>> {
    if s_p.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let partners = s_p
        .iter()
        .map(antipodal_partner)
        .collect::<Result<Vec<_>>>()?;
    Ok(s_p.iter().cloned().chain(partners).collect())
}

/// A receiver that ignores transmission order: `n` uniformly chosen states
/// from `set`, each measured in a random Pauli basis, all pooled into one
/// reconstruction. Returns its trace distance to `I/2`.
pub fn pooled_trace_distance(
    set: &[DensityMatrix],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let first = set.first().ok_or(Error::EmptyCalibrationSet)?;
    let n_qubits = first.n_qubits();
    let mut table = ExpectationTable::new(n_qubits);
    for t in 0..n {
        let state = &set[rng.random_range(0..set.len())];
        let basis = sample_basis(n_qubits, rng);
        let outcomes = measure_pauli(state, &basis, rng)?;
        table.add(&MeasurementRecord::new(t as u32, basis, outcomes)?)?;
    }
    trace_distance(
        &reconstruct(&table, n_qubits)?,
        &DensityMatrix::maximally_mixed(n_qubits)?,
    )
}

/// Pooled trace distance of the blinded version of `s_p` for each `n`.
pub fn theorem1_adversary_check(
    s_p: &[DensityMatrix],
    n_values: &[usize],
    rng: &mut dyn RngCore,
) -> Result<Vec<(usize, f64)>> {
    let set = blinded_set(s_p)?;
    n_values
        .iter()
        .map(|&n| Ok((n, pooled_trace_distance(&set, n, rng)?)))
        .collect()
}

/// Rows `pooled_trace_distance` per `(trial, n)`: the uncalibrated column
/// pools `s_p` alone, the calibrated column pools the blinded set.
pub fn scenario_theorem1(
    s_p: &[DensityMatrix],
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ScenarioResult> {
    let set = blinded_set(s_p)?;
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::InvalidConfig(
            "transmission counts must be positive".into(),
        ));
    }
    let items: Vec<(usize, usize)> = (0..trials)
        .flat_map(|t| n_values.iter().map(move |&n| (t, n)))
        .collect();
    let rows = items
        .par_iter()
        .map(|&(trial, n)| {
            let item = child_seed(seed, n as u64, trial as u64);
            let plain = pooled_trace_distance(s_p, n, &mut rng_from_seed(item))?;
            let blinded = pooled_trace_distance(&set, n, &mut rng_from_seed(item))?;
            Ok(ResultRow {
                length_km: 0.0,
                trial,
                metric: "pooled_trace_distance".into(),
                value_uncalibrated: plain,
                value_calibrated: blinded,
                iterations_used: 0,
                shots: n,
                seed: item,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult::new("theorem1", rows))
}
