//! Sender party: state choice, encoding, cost evaluation and convergence.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::qcore::DensityMatrix;
use crate::tomography::MeasurementRecord;

use super::{
    CalibrationConfig, CostFunction, Decoder, ExactDetection, ParamVector, ProtocolMessage,
    SampledBatch,
};

/// True iff the last `streak` successive differences of `history` are all
/// below `epsilon_th` in absolute value.
pub fn check_convergence(history: &[f64], epsilon_th: f64, streak: usize) -> bool {
    let streak = streak.max(1);
    if history.len() < streak + 1 {
        return false;
    }
    history[history.len() - streak - 1..]
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() < epsilon_th)
}

fn encode_set(config: &CalibrationConfig) -> Result<Vec<DensityMatrix>> {
    match &config.encoder {
        None => Ok(config.calibration_set.clone()),
        Some(theta) => {
            let enc = Decoder::all(config.n_qubits())?;
            config
                .calibration_set
                .iter()
                .map(|s| enc.apply(s, theta))
                .collect()
        }
    }
}

/// Draws `batch_size` calibration indices uniformly and returns the encoded
/// states alongside them.
pub fn sender_next_batch<R: Rng + ?Sized>(
    config: &CalibrationConfig,
    rng: &mut R,
) -> Result<(Vec<DensityMatrix>, Vec<usize>)> {
    if config.calibration_set.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let encoded = encode_set(config)?;
    let k = encoded.len();
    let indices: Vec<usize> = (0..config.batch_size)
        .map(|_| rng.random_range(0..k))
        .collect();
    let states = indices.iter().map(|&i| encoded[i].clone()).collect();
    Ok((states, indices))
}

/// The sender party. Holds everything the receiver must not learn: the
/// calibration set, the per-transmission choices and the cost function.
pub struct Sender<'a> {
    config: &'a CalibrationConfig,
    cost: &'a dyn CostFunction,
    encoded: Vec<DensityMatrix>,
    choice_rng: Box<dyn RngCore + Send + 'a>,
    cost_rng: Box<dyn RngCore + Send + 'a>,
    sent: Vec<usize>,
    history: Vec<f64>,
    streak: usize,
}

impl<'a> Sender<'a> {
    pub fn new(
        config: &'a CalibrationConfig,
        cost: &'a dyn CostFunction,
        streak: usize,
        choice_rng: Box<dyn RngCore + Send + 'a>,
        cost_rng: Box<dyn RngCore + Send + 'a>,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            encoded: encode_set(config)?,
            config,
            cost,
            choice_rng,
            cost_rng,
            sent: Vec::new(),
            history: Vec::new(),
            streak: streak.max(1),
        })
    }

    /// Chooses the next batch. Exact mode sends each state exactly once.
    pub fn next_batch(&mut self) -> &[usize] {
        let k = self.encoded.len();
        self.sent = if self.config.exact_mode {
            (0..k).collect()
        } else {
            let rng = &mut self.choice_rng;
            (0..self.config.batch_size)
                .map(|_| rng.random_range(0..k))
                .collect()
        };
        &self.sent
    }

    /// Encoded calibration state `index`.
    pub fn outgoing(&self, index: usize) -> &DensityMatrix {
        &self.encoded[index]
    }

    /// Indices of the batch in flight.
    pub fn sent(&self) -> &[usize] {
        &self.sent
    }

    /// Scores a decoded measurement report.
    pub fn score_report(
        &mut self,
        report: &ProtocolMessage,
        residuals: &[Option<DensityMatrix>],
    ) -> Result<f64> {
        let ProtocolMessage::MeasurementReport { records, .. } = report else {
            return Err(Error::UnexpectedMessage(
                "sender expects a measurement report".into(),
            ));
        };
        self.score_records(records, residuals)
    }

    fn score_records(
        &mut self,
        records: &[MeasurementRecord],
        residuals: &[Option<DensityMatrix>],
    ) -> Result<f64> {
        let batch = SampledBatch {
            sent: &self.sent,
            records,
            residuals,
        };
        let cost = self
            .cost
            .sampled(&self.config.calibration_set, &batch, &mut *self.cost_rng)?;
        self.push(cost)
    }

    /// Scores exact detector outputs, one per calibration state.
    pub fn score_exact(&mut self, outputs: &[ExactDetection]) -> Result<f64> {
        let cost = self.cost.exact(&self.config.calibration_set, outputs)?;
        self.push(cost)
    }

    fn push(&mut self, cost: f64) -> Result<f64> {
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost(cost));
        }
        self.history.push(cost);
        Ok(cost)
    }

    pub fn cost_report(&self, iteration: u32) -> Option<ProtocolMessage> {
        self.history
            .last()
            .map(|&cost| ProtocolMessage::CostReport { iteration, cost })
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn converged(&self) -> bool {
        check_convergence(&self.history, self.config.epsilon_th, self.streak)
    }

    /// Encoder parameters in use (all zeros for the identity encoder).
    pub fn encoder(&self) -> ParamVector {
        self.config
            .encoder
            .clone()
            .unwrap_or_else(|| ParamVector::zeros(3 * self.config.n_qubits()))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::qcore::from_bloch;
    use crate::seed::SimRng;

    #[test]
    fn convergence_examples() {
        assert!(check_convergence(&[0.5, 0.5 - 1e-8], 1e-7, 1));
        assert!(!check_convergence(&[0.5, 0.4], 1e-7, 1));
        assert!(check_convergence(&[0.3, 0.3 + 5e-8, 0.3 + 9e-8], 1e-7, 2));
        assert!(!check_convergence(&[0.3], 1e-7, 1));
        assert!(!check_convergence(&[0.3, 0.3], 1e-7, 2));
        assert!(!check_convergence(&[0.1, 0.3, 0.3 + 5e-8], 1e-7, 2));
    }

    fn config(k: usize, n: usize) -> CalibrationConfig {
        let set = (0..k)
            .map(|i| from_bloch([0.0, 0.0, if i % 2 == 0 { 1.0 } else { -1.0 }]).unwrap())
            .collect();
        CalibrationConfig::new(set, n, 10)
    }

    #[test]
    fn single_state_batches() {
        let (states, idx) =
            sender_next_batch(&config(1, 50), &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(states.len(), 50);
        assert!(idx.iter().all(|&i| i == 0));
    }

    #[test]
    fn uniform_choice() {
        let n = 100_000;
        let (_, idx) = sender_next_batch(&config(4, n), &mut SimRng::seed_from_u64(1)).unwrap();
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for s in 0..4 {
            let c = idx.iter().filter(|&&i| i == s).count() as f64;
            assert!((c - n as f64 / 4.0).abs() < 3.0 * sigma, "index {s}: {c}");
        }
    }

    #[test]
    fn batches_are_reproducible() {
        let cfg = config(3, 100);
        let a = sender_next_batch(&cfg, &mut SimRng::seed_from_u64(7))
            .unwrap()
            .1;
        let b = sender_next_batch(&cfg, &mut SimRng::seed_from_u64(7))
            .unwrap()
            .1;
        assert_eq!(a, b);
    }

    #[test]
    fn empty_set_rejected() {
        let cfg = CalibrationConfig::new(vec![], 1, 1);
        assert_eq!(
            sender_next_batch(&cfg, &mut SimRng::seed_from_u64(0)).unwrap_err(),
            Error::EmptyCalibrationSet
        );
    }

    #[test]
    fn encoder_hook_rotates_states() {
        let mut cfg = config(1, 1);
        cfg.encoder = Some(ParamVector::new(vec![0.0, std::f64::consts::PI, 0.0]));
        let (states, _) = sender_next_batch(&cfg, &mut SimRng::seed_from_u64(0)).unwrap();
        let one = DensityMatrix::computational(&[1]).unwrap();
        assert!(crate::qcore::trace_distance(&states[0], &one).unwrap() < 1e-12);
    }
}
