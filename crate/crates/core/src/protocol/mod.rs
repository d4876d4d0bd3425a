//! The calibration protocol: sender and receiver parties, the classical
//! message codec, cost functions, optimizers and the session driver.
//!
//! The receiver side ([`Receiver`]) is constructed from a decoder, a
//! detector and an optimizer, and afterwards only ever consumes quantum
//! states and [`ProtocolMessage`] values. Which states were sent and how the
//! cost is computed stay inside [`Sender`].

mod cost;
mod message;
mod optimizer;
mod receiver;
mod sender;
mod session;

use crate::error::{Error, Result};
use crate::qcore::DensityMatrix;

pub use cost::{
    cost_error_rate, cost_infidelity, swap_correction, BellErrorRate, CostFunction, SampledBatch,
    SiftedErrorRate, TomographicInfidelity,
};
pub use message::{
    decode_message, decode_prefix, encode_message, ProtocolMessage, TerminateReason, HEADER_LEN,
    MAGIC,
};
pub use optimizer::{
    optimizer_update, GradientDescent, NelderMead, Optimizer, OptimizerConfig, OptimizerKind, Spsa,
    UpdateStep,
};
pub use receiver::{
    receiver_process, Decoder, Detection, DetectorKind, ExactDetection, PreparedMeasurement,
    Receiver,
};
pub use sender::{check_convergence, sender_next_batch, Sender};
pub use session::{
    run_session, run_session_with, Direction, Session, SessionOutcome, SessionSetup,
    SessionTranscript,
};

/// Decoder (or encoder) parameters in radians.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// What the sender minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// Mean `1 - F` between tomographic reconstructions and the sent states.
    InfidelityTomographic,
    /// Fraction of mismatched classical symbols.
    ErrorRate,
}

/// Parameters of one calibration session.
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub calibration_set: Vec<DensityMatrix>,
    /// Transmissions per iteration.
    pub batch_size: usize,
    pub epsilon_th: f64,
    pub i_max: usize,
    pub cost_kind: CostKind,
    pub optimizer: OptimizerConfig,
    /// Exact mode sends every calibration state once per iteration through
    /// the averaged channel and scores exact outputs instead of shots.
    pub exact_mode: bool,
    /// Consecutive small cost changes required to stop; `None` picks a
    /// default from the mode and optimizer.
    pub streak: Option<usize>,
    /// Per-qubit encoder rotation angles applied by the sender; `None` is
    /// the identity encoder.
    pub encoder: Option<ParamVector>,
}

impl CalibrationConfig {
    pub fn new(calibration_set: Vec<DensityMatrix>, batch_size: usize, i_max: usize) -> Self {
        Self {
            calibration_set,
            batch_size,
            epsilon_th: 1e-7,
            i_max,
            cost_kind: CostKind::InfidelityTomographic,
            optimizer: OptimizerConfig::default(),
            exact_mode: false,
            streak: None,
            encoder: None,
        }
    }

    /// Qubit count shared by the calibration states.
    pub fn n_qubits(&self) -> usize {
        self.calibration_set.first().map_or(0, |s| s.n_qubits())
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .calibration_set
            .first()
            .ok_or(Error::EmptyCalibrationSet)?;
        if let Some(bad) = self
            .calibration_set
            .iter()
            .find(|s| s.n_qubits() != first.n_qubits())
        {
            return Err(Error::DimensionMismatch {
                expected: first.n_qubits(),
                found: bad.n_qubits(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.i_max == 0 {
            return Err(Error::InvalidConfig("i_max must be at least 1".into()));
        }
        if !(self.epsilon_th >= 0.0) {
            return Err(Error::InvalidConfig(
                "epsilon_th must be non-negative".into(),
            ));
        }
        if self.streak == Some(0) {
            return Err(Error::InvalidConfig(
                "convergence streak must be at least 1".into(),
            ));
        }
        if let Some(enc) = &self.encoder {
            if enc.len() != 3 * first.n_qubits() || !enc.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "encoder needs {} finite angles, got {}",
                    3 * first.n_qubits(),
                    enc.len()
                )));
            }
        }
        self.optimizer.validate()
    }

    /// Convergence streak in effect for a decoder with `n_params` angles.
    pub fn effective_streak(&self, n_params: usize) -> usize {
        if let Some(s) = self.streak {
            return s;
        }
        let base = if self.exact_mode { 1 } else { 5 };
        // probes along idle angles can return identical costs
        base.max(self.optimizer.flat_window(n_params))
    }
}
