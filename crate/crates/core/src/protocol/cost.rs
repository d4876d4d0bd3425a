//! Sender-side cost functions.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::qcore::{
    apply_unitary, bell_measurement, bell_probabilities, infidelity, pauli_expectation, BellIndex,
    DensityMatrix, Pauli, PauliString, Unitary,
};
use crate::tomography::{reconstruct, ExpectationTable, MeasurementRecord};

use super::ExactDetection;

/// `1 - (1/n) Σ δ(in_i, out_i)`: the fraction of mismatched symbols.
pub fn cost_error_rate<T: PartialEq>(inputs: &[T], outputs: &[T]) -> Result<f64> {
    if inputs.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: outputs.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Empty("error-rate inputs"));
    }
    let wrong = inputs.iter().zip(outputs).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / inputs.len() as f64)
}

/// Mean infidelity between per-state tomographic reconstructions and the
/// states that were sent. `sent[t]` is the calibration index of transmission
/// `t`; records are matched to it through their transmission index.
pub fn cost_infidelity(
    calibration_set: &[DensityMatrix],
    records: &[MeasurementRecord],
    sent: &[usize],
) -> Result<f64> {
    let first = calibration_set.first().ok_or(Error::EmptyCalibrationSet)?;
    let n = first.n_qubits();
    let mut tables: Vec<ExpectationTable> = calibration_set
        .iter()
        .map(|_| ExpectationTable::new(n))
        .collect();
    let mut counts = vec![0usize; calibration_set.len()];
    for r in records {
        let t = r.transmission_index as usize;
        let &s = sent.get(t).ok_or(Error::LengthMismatch {
            left: sent.len(),
            right: t + 1,
        })?;
        let table = tables.get_mut(s).ok_or(Error::QubitOutOfRange {
            qubit: s,
            n_qubits: calibration_set.len(),
        })?;
        table.add(r)?;
        counts[s] += 1;
    }
    let mut total = 0.0;
    for (index, ((table, target), count)) in
        tables.iter().zip(calibration_set).zip(&counts).enumerate()
    {
        if *count == 0 {
            return Err(Error::EmptyStateGroup { index });
        }
        total += infidelity(&reconstruct(table, n)?, target)?;
    }
    Ok(total / calibration_set.len() as f64)
}

/// Sender's view of one sampled iteration.
#[derive(Debug, Clone, Copy)]
pub struct SampledBatch<'a> {
    /// Calibration index of every transmission.
    pub sent: &'a [usize],
    /// Records as reported by the receiver.
    pub records: &'a [MeasurementRecord],
    /// Quantum remainder held by the endpoints, aligned with `records`.
    pub residuals: &'a [Option<DensityMatrix>],
}

/// A scalar objective the sender evaluates each iteration.
pub trait CostFunction: Send + Sync {
    fn sampled(
        &self,
        calibration_set: &[DensityMatrix],
        batch: &SampledBatch<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<f64>;

    /// Cost from noise-free outputs, one per calibration state.
    fn exact(&self, calibration_set: &[DensityMatrix], outputs: &[ExactDetection]) -> Result<f64>;
}

fn check_outputs(calibration_set: &[DensityMatrix], outputs: &[ExactDetection]) -> Result<()> {
    if calibration_set.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    if outputs.len() != calibration_set.len() {
        return Err(Error::LengthMismatch {
            left: calibration_set.len(),
            right: outputs.len(),
        });
    }
    Ok(())
}

fn needs(what: &str) -> Error {
    Error::InvalidConfig(format!("cost function needs {what}"))
}

/// Tomographic reconstruction per calibration state, scored by infidelity.
#[derive(Debug, Clone, Copy, Default)]
pub struct TomographicInfidelity;

impl CostFunction for TomographicInfidelity {
    fn sampled(
        &self,
        calibration_set: &[DensityMatrix],
        batch: &SampledBatch<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<f64> {
        cost_infidelity(calibration_set, batch.records, batch.sent)
    }

    fn exact(&self, calibration_set: &[DensityMatrix], outputs: &[ExactDetection]) -> Result<f64> {
        check_outputs(calibration_set, outputs)?;
        let mut total = 0.0;
        for (target, out) in calibration_set.iter().zip(outputs) {
            let ExactDetection::Decoded(decoded) = out else {
                return Err(needs("a Pauli detector"));
            };
            total += infidelity(decoded, target)?;
        }
        Ok(total / calibration_set.len() as f64)
    }
}

/// Error rate over rounds whose basis has a definite outcome for the sent
/// state (the sifted rounds of a prepare-and-measure scheme).
#[derive(Debug, Clone, Copy, Default)]
pub struct SiftedErrorRate;

/// `expected[q][letter]`: the deterministic ±1 outcome of measuring qubit
/// `q` in X, Y or Z, if there is one.
fn definite_outcomes(state: &DensityMatrix) -> Result<Vec<[Option<i8>; 3]>> {
    let n = state.n_qubits();
    (0..n)
        .map(|q| {
            let mut row = [None; 3];
            for (k, &p) in Pauli::MEASUREMENT_BASES.iter().enumerate() {
                let mut letters = vec![Pauli::I; n];
                letters[q] = p;
                let e = pauli_expectation(state, &PauliString::new(letters))?;
                if (e.abs() - 1.0).abs() < 1e-9 {
                    row[k] = Some(if e > 0.0 { 1 } else { -1 });
                }
            }
            Ok(row)
        })
        .collect()
}

fn letter_slot(p: Pauli) -> usize {
    p.digit() - 1
}

fn sifted_expectation(table: &[[Option<i8>; 3]], basis: &PauliString) -> Option<Vec<i8>> {
    basis
        .letters()
        .iter()
        .zip(table)
        .map(|(&p, row)| row[letter_slot(p)])
        .collect()
}

impl CostFunction for SiftedErrorRate {
    fn sampled(
        &self,
        calibration_set: &[DensityMatrix],
        batch: &SampledBatch<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let tables = calibration_set
            .iter()
            .map(definite_outcomes)
            .collect::<Result<Vec<_>>>()?;
        let (mut sent_bits, mut got_bits) = (Vec::new(), Vec::new());
        for r in batch.records {
            let t = r.transmission_index as usize;
            let &s = batch.sent.get(t).ok_or(Error::LengthMismatch {
                left: batch.sent.len(),
                right: t + 1,
            })?;
            if let Some(expected) = sifted_expectation(&tables[s], &r.basis) {
                sent_bits.extend(expected);
                got_bits.extend_from_slice(&r.outcomes);
            }
        }
        if sent_bits.is_empty() {
            return Err(Error::NothingSifted);
        }
        cost_error_rate(&sent_bits, &got_bits)
    }

    fn exact(&self, calibration_set: &[DensityMatrix], outputs: &[ExactDetection]) -> Result<f64> {
        check_outputs(calibration_set, outputs)?;
        let (mut err, mut bits) = (0.0, 0usize);
        for (state, out) in calibration_set.iter().zip(outputs) {
            let ExactDetection::Decoded(decoded) = out else {
                return Err(needs("a Pauli detector"));
            };
            let n = state.n_qubits();
            let table = definite_outcomes(state)?;
            let got = definite_outcomes_soft(decoded)?;
            for code in 0..3usize.pow(n as u32) {
                let basis = PauliString::new(
                    (0..n)
                        .map(|q| {
                            Pauli::MEASUREMENT_BASES[(code / 3usize.pow((n - 1 - q) as u32)) % 3]
                        })
                        .collect(),
                );
                if let Some(expected) = sifted_expectation(&table, &basis) {
                    for (q, (&p, e)) in basis.letters().iter().zip(expected).enumerate() {
                        err += (1.0 - e as f64 * got[q][letter_slot(p)]) / 2.0;
                        bits += 1;
                    }
                }
            }
        }
        if bits == 0 {
            return Err(Error::NothingSifted);
        }
        Ok(err / bits as f64)
    }
}

/// Single-qubit marginal expectations of X, Y, Z per qubit.
fn definite_outcomes_soft(state: &DensityMatrix) -> Result<Vec<[f64; 3]>> {
    let n = state.n_qubits();
    (0..n)
        .map(|q| {
            let mut row = [0.0; 3];
            for (k, &p) in Pauli::MEASUREMENT_BASES.iter().enumerate() {
                let mut letters = vec![Pauli::I; n];
                letters[q] = p;
                row[k] = pauli_expectation(state, &PauliString::new(letters))?;
            }
            Ok(row)
        })
        .collect()
}

/// Entanglement-swapping cost: the endpoints undo the announced Bell
/// outcome with `X^b2 Z^b1` on their second qubit, Bell-measure their pair,
/// and compare with the Bell state originally prepared.
#[derive(Debug, Clone)]
pub struct BellErrorRate {
    prepared: Vec<BellIndex>,
}

impl BellErrorRate {
    /// `prepared[s]` is the Bell state carried by calibration state `s`.
    pub fn new(prepared: Vec<BellIndex>) -> Self {
        Self { prepared }
    }

    fn prepared(&self, s: usize) -> Result<BellIndex> {
        self.prepared.get(s).copied().ok_or(Error::LengthMismatch {
            left: self.prepared.len(),
            right: s + 1,
        })
    }
}

/// Applies `X^b2 Z^b1` to qubit 1 of a two-qubit state.
pub fn swap_correction(rho: &DensityMatrix, announced: BellIndex) -> Result<DensityMatrix> {
    let (b1, b2) = announced.bits();
    let mut out = rho.clone();
    if b1 == 1 {
        out = apply_unitary(&out, &Unitary::pauli_z(), &[1])?;
    }
    if b2 == 1 {
        out = apply_unitary(&out, &Unitary::pauli_x(), &[1])?;
    }
    Ok(out)
}

fn announced_index(record: &MeasurementRecord) -> Result<BellIndex> {
    match record.outcomes.as_slice() {
        [o1, o2] => BellIndex::new(u8::from(*o1 < 0), u8::from(*o2 < 0)),
        _ => Err(Error::LengthMismatch {
            left: 2,
            right: record.outcomes.len(),
        }),
    }
}

impl CostFunction for BellErrorRate {
    fn sampled(
        &self,
        _calibration_set: &[DensityMatrix],
        batch: &SampledBatch<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        if batch.residuals.len() != batch.records.len() {
            return Err(Error::LengthMismatch {
                left: batch.records.len(),
                right: batch.residuals.len(),
            });
        }
        let mut sent = Vec::with_capacity(batch.records.len());
        let mut got = Vec::with_capacity(batch.records.len());
        for (r, residual) in batch.records.iter().zip(batch.residuals) {
            let t = r.transmission_index as usize;
            let &s = batch.sent.get(t).ok_or(Error::LengthMismatch {
                left: batch.sent.len(),
                right: t + 1,
            })?;
            let pair = residual
                .as_ref()
                .ok_or_else(|| needs("a Bell detector on a four-qubit register"))?;
            let corrected = swap_correction(pair, announced_index(r)?)?;
            let (measured, _) = bell_measurement(&corrected, 0, 1, rng)?;
            sent.push(self.prepared(s)?);
            got.push(measured);
        }
        cost_error_rate(&sent, &got)
    }

    fn exact(&self, calibration_set: &[DensityMatrix], outputs: &[ExactDetection]) -> Result<f64> {
        check_outputs(calibration_set, outputs)?;
        let mut total = 0.0;
        for (s, out) in outputs.iter().enumerate() {
            let ExactDetection::Bell(branches) = out else {
                return Err(needs("a Bell detector"));
            };
            let want = self.prepared(s)?.ordinal();
            for b in branches {
                let pair = b
                    .post_state
                    .as_ref()
                    .ok_or_else(|| needs("a Bell detector on a four-qubit register"))?;
                let probs = bell_probabilities(&swap_correction(pair, b.index)?, 0, 1)?;
                total += b.probability * (1.0 - probs[want]);
            }
        }
        Ok(total / outputs.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::qcore::{bell_state, fidelity, from_bloch, rot_unitary};
    use crate::seed::SimRng;
    use crate::tomography::sample_basis;

    #[test]
    fn error_rate_examples() {
        assert_eq!(cost_error_rate(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 0.0);
        assert_eq!(cost_error_rate(&[0, 1, 1, 0], &[1, 0, 0, 1]).unwrap(), 1.0);
        assert_eq!(cost_error_rate(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.25);
        assert!(cost_error_rate::<u8>(&[], &[]).is_err());
        assert!(cost_error_rate(&[0], &[0, 1]).is_err());
    }

    fn sample_records(
        states: &[DensityMatrix],
        sent: &[usize],
        seed: u64,
    ) -> Vec<MeasurementRecord> {
        let mut rng = SimRng::seed_from_u64(seed);
        sent.iter()
            .enumerate()
            .map(|(t, &s)| {
                let basis = sample_basis(states[s].n_qubits(), &mut rng);
                let out = crate::qcore::measure_pauli(&states[s], &basis, &mut rng).unwrap();
                MeasurementRecord::new(t as u32, basis, out).unwrap()
            })
            .collect()
    }

    #[test]
    fn infidelity_of_fully_depolarized_states() {
        let set = vec![
            from_bloch([0.0, 0.0, 1.0]).unwrap(),
            from_bloch([1.0, 0.0, 0.0]).unwrap(),
        ];
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let sent: Vec<usize> = (0..40_000).map(|t| t % 2).collect();
        let received = vec![mixed.clone(), mixed];
        let records = sample_records(&received, &sent, 1);
        let c = cost_infidelity(&set, &records, &sent).unwrap();
        assert!((c - 0.5).abs() < 0.02, "{c}");
        let exact = TomographicInfidelity
            .exact(
                &set,
                &[
                    ExactDetection::Decoded(DensityMatrix::maximally_mixed(1).unwrap()),
                    ExactDetection::Decoded(DensityMatrix::maximally_mixed(1).unwrap()),
                ],
            )
            .unwrap();
        assert!((exact - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infidelity_under_known_rotation() {
        let rho = from_bloch([0.6, 0.0, 0.8]).unwrap();
        let u = rot_unitary(0.3, 0.9, -0.4);
        let rotated = apply_unitary(&rho, &u, &[0]).unwrap();
        let direct = 1.0 - fidelity(&rotated, &rho).unwrap();
        let exact = TomographicInfidelity
            .exact(
                std::slice::from_ref(&rho),
                &[ExactDetection::Decoded(rotated.clone())],
            )
            .unwrap();
        assert!((exact - direct).abs() < 1e-12);
        let sent = vec![0; 100_000];
        let records = sample_records(&[rotated], &sent, 2);
        let sampled = cost_infidelity(&[rho], &records, &sent).unwrap();
        assert!((sampled - direct).abs() < 0.01, "{sampled} vs {direct}");
    }

    #[test]
    fn empty_group_is_reported() {
        let set = vec![
            from_bloch([0.0, 0.0, 1.0]).unwrap(),
            from_bloch([0.0, 0.0, -1.0]).unwrap(),
        ];
        let sent = vec![0, 0, 0];
        let records = sample_records(&set, &sent, 3);
        assert_eq!(
            cost_infidelity(&set, &records, &sent),
            Err(Error::EmptyStateGroup { index: 1 })
        );
    }

    fn bb84() -> Vec<DensityMatrix> {
        [
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
        ]
        .iter()
        .map(|&r| from_bloch(r).unwrap())
        .collect()
    }

    #[test]
    fn sifted_error_rate_noiseless_and_flipped() {
        let set = bb84();
        let sent: Vec<usize> = (0..2000).map(|t| t % 4).collect();
        let records = sample_records(&set, &sent, 4);
        let batch = SampledBatch {
            sent: &sent,
            records: &records,
            residuals: &[],
        };
        let mut rng = SimRng::seed_from_u64(0);
        assert_eq!(
            SiftedErrorRate.sampled(&set, &batch, &mut rng).unwrap(),
            0.0
        );
        // Y-flip: every sifted bit flips
        let flipped: Vec<DensityMatrix> = set
            .iter()
            .map(|s| apply_unitary(s, &Unitary::pauli_y(), &[0]).unwrap())
            .collect();
        let records = sample_records(&flipped, &sent, 5);
        let batch = SampledBatch {
            sent: &sent,
            records: &records,
            residuals: &[],
        };
        assert_eq!(
            SiftedErrorRate.sampled(&set, &batch, &mut rng).unwrap(),
            1.0
        );
        let outs: Vec<ExactDetection> = flipped.into_iter().map(ExactDetection::Decoded).collect();
        assert!((SiftedErrorRate.exact(&set, &outs).unwrap() - 1.0).abs() < 1e-12);
        let mixed: Vec<ExactDetection> = (0..4)
            .map(|_| ExactDetection::Decoded(DensityMatrix::maximally_mixed(1).unwrap()))
            .collect();
        assert!((SiftedErrorRate.exact(&set, &mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nothing_sifted_for_y_states() {
        let set = vec![from_bloch([0.0, 1.0, 0.0]).unwrap()];
        let sent = vec![0; 30];
        let records: Vec<MeasurementRecord> = (0..30)
            .map(|t| MeasurementRecord::new(t, "X".parse().unwrap(), vec![1]).unwrap())
            .collect();
        let batch = SampledBatch {
            sent: &sent,
            records: &records,
            residuals: &[],
        };
        let mut rng = SimRng::seed_from_u64(0);
        assert_eq!(
            SiftedErrorRate.sampled(&set, &batch, &mut rng),
            Err(Error::NothingSifted)
        );
    }

    #[test]
    fn correction_restores_bell_pairs() {
        // X^b2 Z^b1 on qubit 1 maps Φ+ onto the announced index, and is
        // its own inverse up to phase
        for idx in BellIndex::ALL {
            let corrected = swap_correction(&bell_state(idx), idx).unwrap();
            let p = bell_probabilities(&corrected, 0, 1).unwrap();
            assert!((p[0] - 1.0).abs() < 1e-12, "{idx:?}");
        }
    }
}
