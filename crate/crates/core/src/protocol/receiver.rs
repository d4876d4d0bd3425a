//! Receiver party: decoder, detector and the receiver's optimizer.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::qcore::{
    apply_1q, bell_branches, index_to_outcomes, outcome_distribution, rot_unitary, sample_index,
    BellBranch, DensityMatrix, Pauli, PauliString,
};
use crate::tomography::{sample_basis, MeasurementRecord};

use super::{Optimizer, ParamVector, ProtocolMessage};

/// Per-qubit `RZ·RY·RZ` rotations on selected qubits of a register.
///
/// Parameters are consumed in triples `(alpha, beta, gamma)`, one triple
/// per target in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    register: usize,
    targets: Vec<usize>,
}

impl Decoder {
    pub fn new(register: usize, targets: Vec<usize>) -> Result<Self> {
        crate::qcore::DensityMatrix::maximally_mixed(register)?;
        for (i, &t) in targets.iter().enumerate() {
            if t >= register {
                return Err(Error::QubitOutOfRange {
                    qubit: t,
                    n_qubits: register,
                });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget);
            }
        }
        Ok(Self { register, targets })
    }

    /// Rotations on every qubit of an `n`-qubit register.
    pub fn all(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn register(&self) -> usize {
        self.register
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn n_params(&self) -> usize {
        3 * self.targets.len()
    }

    pub fn apply(&self, rho: &DensityMatrix, phi: &ParamVector) -> Result<DensityMatrix> {
        if phi.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                left: self.n_params(),
                right: phi.len(),
            });
        }
        if rho.n_qubits() != self.register {
            return Err(Error::DimensionMismatch {
                expected: self.register,
                found: rho.n_qubits(),
            });
        }
        let mut out = rho.clone();
        for (angles, &q) in phi.values().chunks_exact(3).zip(&self.targets) {
            let u = rot_unitary(angles[0], angles[1], angles[2]);
            apply_1q(out.data_mut(), self.register, u.as_slice(), q);
        }
        Ok(out)
    }
}

/// What the receiver measures after decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// Uniformly random product Pauli basis on every qubit.
    Pauli,
    /// Bell-state measurement on two qubits; the rest stay with the endpoints.
    Bell { q1: usize, q2: usize },
}

/// One sampled detection: the reported record plus, for a Bell detector,
/// the unmeasured qubits that remain with the endpoints.
#[derive(Debug, Clone)]
pub struct Detection {
    pub record: MeasurementRecord,
    pub residual: Option<DensityMatrix>,
}

/// Noise-free detector output for exact mode.
#[derive(Debug, Clone)]
pub enum ExactDetection {
    Decoded(DensityMatrix),
    Bell(Vec<BellBranch>),
}

/// A decoded state ready for repeated sampling. Outcome distributions are
/// computed on first use and reused.
#[derive(Debug, Clone)]
pub enum PreparedMeasurement {
    Pauli {
        decoded: DensityMatrix,
        distributions: Vec<Option<Vec<f64>>>,
    },
    Bell {
        weights: Vec<f64>,
        branches: Vec<BellBranch>,
    },
}

fn bell_basis() -> PauliString {
    PauliString::new(vec![Pauli::Z, Pauli::Z])
}

fn bit_outcome(b: u8) -> i8 {
    if b == 0 {
        1
    } else {
        -1
    }
}

impl PreparedMeasurement {
    pub fn new(kind: DetectorKind, decoded: DensityMatrix) -> Result<Self> {
        match kind {
            DetectorKind::Pauli => {
                let slots = 1usize << (2 * decoded.n_qubits());
                Ok(Self::Pauli {
                    decoded,
                    distributions: vec![None; slots],
                })
            }
            DetectorKind::Bell { q1, q2 } => {
                let branches = bell_branches(&decoded, q1, q2)?;
                Ok(Self::Bell {
                    weights: branches.iter().map(|b| b.probability).collect(),
                    branches,
                })
            }
        }
    }

    pub fn sample(&mut self, transmission_index: u32, rng: &mut dyn RngCore) -> Result<Detection> {
        match self {
            Self::Pauli {
                decoded,
                distributions,
            } => {
                let basis = sample_basis(decoded.n_qubits(), rng);
                let slot = &mut distributions[basis.index()];
                if slot.is_none() {
                    *slot = Some(outcome_distribution(decoded, &basis)?);
                }
                let probs = slot.as_deref().expect("filled above");
                let outcomes = index_to_outcomes(sample_index(probs, rng), basis.len());
                Ok(Detection {
                    record: MeasurementRecord::new(transmission_index, basis, outcomes)?,
                    residual: None,
                })
            }
            Self::Bell { weights, branches } => {
                let branch = &branches[sample_index(weights, rng)];
                let (b1, b2) = branch.index.bits();
                Ok(Detection {
                    record: MeasurementRecord::new(
                        transmission_index,
                        bell_basis(),
                        vec![bit_outcome(b1), bit_outcome(b2)],
                    )?,
                    residual: branch.post_state.clone(),
                })
            }
        }
    }

    pub fn into_exact(self) -> ExactDetection {
        match self {
            Self::Pauli { decoded, .. } => ExactDetection::Decoded(decoded),
            Self::Bell { branches, .. } => ExactDetection::Bell(branches),
        }
    }
}

/// Decodes `state_in` with `phi`, picks a random Pauli basis and measures.
pub fn receiver_process(
    state_in: &DensityMatrix,
    phi: &ParamVector,
    n_qubits: usize,
    rng: &mut dyn RngCore,
) -> Result<MeasurementRecord> {
    let decoded = Decoder::all(n_qubits)?.apply(state_in, phi)?;
    Ok(PreparedMeasurement::new(DetectorKind::Pauli, decoded)?
        .sample(0, rng)?
        .record)
}

/// The receiver party. After construction it consumes only incoming quantum
/// states and protocol messages.
pub struct Receiver {
    decoder: Decoder,
    detector: DetectorKind,
    optimizer: Box<dyn Optimizer>,
    last_cost: Option<u32>,
    finished: bool,
}

impl std::fmt::Debug for Receiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Receiver")
            .field("decoder", &self.decoder)
            .field("detector", &self.detector)
            .field("params", self.optimizer.evaluation_point())
            .field("finished", &self.finished)
            .finish()
    }
}

impl Receiver {
    pub fn new(
        decoder: Decoder,
        detector: DetectorKind,
        optimizer: Box<dyn Optimizer>,
    ) -> Result<Self> {
        if optimizer.evaluation_point().len() != decoder.n_params() {
            return Err(Error::LengthMismatch {
                left: decoder.n_params(),
                right: optimizer.evaluation_point().len(),
            });
        }
        if let DetectorKind::Bell { q1, q2 } = detector {
            if q1 == q2 {
                return Err(Error::SameQubit);
            }
            crate::qcore::apply_unitary(
                &DensityMatrix::maximally_mixed(decoder.register())?,
                &crate::qcore::Unitary::cnot(),
                &[q1, q2],
            )?;
        }
        Ok(Self {
            decoder,
            detector,
            optimizer,
            last_cost: None,
            finished: false,
        })
    }

    /// Decoder setting used for the current iteration.
    pub fn params(&self) -> &ParamVector {
        self.optimizer.evaluation_point()
    }

    /// The optimizer's current estimate of the best decoder.
    pub fn center(&self) -> &ParamVector {
        self.optimizer.center()
    }

    pub fn optimizer(&self) -> &dyn Optimizer {
        self.optimizer.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Decodes an incoming state with the current parameters.
    pub fn prepare(&self, incoming: &DensityMatrix) -> Result<PreparedMeasurement> {
        let decoded = self.decoder.apply(incoming, self.params())?;
        PreparedMeasurement::new(self.detector, decoded)
    }

    pub fn report(&self, iteration: u32, records: Vec<MeasurementRecord>) -> ProtocolMessage {
        ProtocolMessage::MeasurementReport { iteration, records }
    }

    /// Consumes one message from the sender. A cost report drives the
    /// optimizer; a terminate message ends the session.
    pub fn handle(&mut self, msg: &ProtocolMessage) -> Result<()> {
        if self.finished {
            return Err(Error::UnexpectedMessage(
                "session already terminated".into(),
            ));
        }
        match msg {
            ProtocolMessage::CostReport { iteration, cost } => {
                if self.last_cost.is_some_and(|last| *iteration <= last) {
                    return Err(Error::UnexpectedMessage(format!(
                        "cost report for iteration {iteration} out of order"
                    )));
                }
                self.last_cost = Some(*iteration);
                self.optimizer.tell(*cost)
            }
            ProtocolMessage::Terminate { .. } => {
                self.finished = true;
                Ok(())
            }
            ProtocolMessage::MeasurementReport { .. } => Err(Error::UnexpectedMessage(
                "measurement reports travel from receiver to sender".into(),
            )),
        }
    }
}
