//! Turn-based session driver.
//!
//! Every classical message is encoded to bytes, recorded, and decoded by the
//! other party before use.

use rand::RngCore;

use crate::channels::Channel;
use crate::error::{CodecError, Error, Result};
use crate::qcore::DensityMatrix;
use crate::seed::{stream_rng, Stream};

use super::{
    decode_message, decode_prefix, encode_message, CalibrationConfig, CostFunction, CostKind,
    Decoder, DetectorKind, ExactDetection, ParamVector, PreparedMeasurement, ProtocolMessage,
    Receiver, Sender, SiftedErrorRate, TerminateReason, TomographicInfidelity,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ReceiverToSender,
    SenderToReceiver,
}

impl Direction {
    pub fn of(msg: &ProtocolMessage) -> Self {
        match msg {
            ProtocolMessage::MeasurementReport { .. } => Direction::ReceiverToSender,
            _ => Direction::SenderToReceiver,
        }
    }
}

/// The classical side of a session: every frame in order, plus the cost
/// history the sender computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionTranscript {
    frames: Vec<Vec<u8>>,
    cost_history: Vec<f64>,
}

impl SessionTranscript {
    fn push(&mut self, msg: &ProtocolMessage) -> Result<ProtocolMessage> {
        let frame = encode_message(msg);
        let decoded = decode_message(&frame)?;
        if let ProtocolMessage::CostReport { cost, .. } = decoded {
            self.cost_history.push(cost);
        }
        self.frames.push(frame);
        Ok(decoded)
    }

    pub fn frames(&self) -> &[Vec<u8>] {
        &self.frames
    }

    pub fn cost_history(&self) -> &[f64] {
        &self.cost_history
    }

    /// All messages with their direction, decoded from the recorded frames.
    pub fn messages(&self) -> Result<Vec<(Direction, ProtocolMessage)>, CodecError> {
        self.frames
            .iter()
            .map(|f| decode_message(f).map(|m| (Direction::of(&m), m)))
            .collect()
    }

    /// The concatenated byte stream.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.frames.concat()
    }

    /// Rebuilds a transcript from a concatenated byte stream.
    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self, CodecError> {
        let mut out = Self::default();
        while !bytes.is_empty() {
            let (msg, used) = decode_prefix(bytes)?;
            if let ProtocolMessage::CostReport { cost, .. } = msg {
                out.cost_history.push(cost);
            }
            out.frames.push(bytes[..used].to_vec());
            bytes = &bytes[used..];
        }
        Ok(out)
    }

    /// Decodes the recorded stream again; equal to `self` for any transcript
    /// produced by a session.
    pub fn replay(&self) -> Result<Self, CodecError> {
        Self::from_bytes(&self.to_bytes())
    }
}

/// Where a session ended and what it learned.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    /// Optimizer center after the last update.
    pub final_params: ParamVector,
    /// Lowest reported cost and the decoder setting that produced it.
    pub best: Option<(ParamVector, f64)>,
    /// Iterations completed (cost reports sent).
    pub iterations: usize,
    pub reason: TerminateReason,
    pub failure: Option<Error>,
    /// Decoder setting used in each iteration.
    pub eval_history: Vec<ParamVector>,
    /// Optimizer center before the first and after every iteration.
    pub center_history: Vec<ParamVector>,
}

impl SessionOutcome {
    /// `Err` with the recorded failure, if the session ended on one.
    pub fn check(&self) -> Result<()> {
        match &self.failure {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    pub fn best_cost(&self) -> Option<f64> {
        self.best.as_ref().map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub transcript: SessionTranscript,
    pub outcome: SessionOutcome,
}

/// Physical layout of a session: the channel, what the receiver controls
/// and measures, and the sender's cost.
pub struct SessionSetup<'a> {
    pub channel: &'a dyn Channel,
    pub decoder: Decoder,
    pub detector: DetectorKind,
    pub cost: &'a dyn CostFunction,
}

/// Pauli-tomography session with a decoder on every qubit; the cost follows
/// `config.cost_kind`.
pub fn run_session(
    config: &CalibrationConfig,
    channel: &dyn Channel,
    seed: u64,
) -> Result<Session> {
    let cost: &dyn CostFunction = match config.cost_kind {
        CostKind::InfidelityTomographic => &TomographicInfidelity,
        CostKind::ErrorRate => &SiftedErrorRate,
    };
    let setup = SessionSetup {
        channel,
        decoder: Decoder::all(config.n_qubits())?,
        detector: DetectorKind::Pauli,
        cost,
    };
    run_session_with(config, setup, seed)
}

struct Rngs {
    channel: Box<dyn RngCore + Send>,
    receiver: Box<dyn RngCore + Send>,
}

/// Runs the protocol until convergence or `i_max`. Configuration problems
/// are returned as `Err`; failures after the first message end the session
/// with a terminate frame and are reported in [`SessionOutcome::failure`].
pub fn run_session_with(
    config: &CalibrationConfig,
    setup: SessionSetup<'_>,
    seed: u64,
) -> Result<Session> {
    config.validate()?;
    let n = config.n_qubits();
    for found in [setup.channel.n_qubits(), setup.decoder.register()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let n_params = setup.decoder.n_params();
    let opt_seed = stream_rng(seed, Stream::Optimizer).next_u64();
    let optimizer = config
        .optimizer
        .build(ParamVector::zeros(n_params), opt_seed)?;
    let mut receiver = Receiver::new(setup.decoder, setup.detector, optimizer)?;
    let mut sender = Sender::new(
        config,
        setup.cost,
        config.effective_streak(n_params),
        Box::new(stream_rng(seed, Stream::Sender)),
        Box::new(stream_rng(seed, Stream::Evaluation)),
    )?;
    let mut rngs = Rngs {
        channel: Box::new(stream_rng(seed, Stream::Channel)),
        receiver: Box::new(stream_rng(seed, Stream::Receiver)),
    };

    let mut transcript = SessionTranscript::default();
    let mut eval_history = Vec::new();
    let mut center_history = vec![receiver.center().clone()];
    let mut failure = None;
    let mut reason = TerminateReason::MaxIterations;
    let mut iterations = 0;

    for i in 0..config.i_max {
        let iteration = i as u32;
        eval_history.push(receiver.params().clone());
        let step = iterate(
            config,
            setup.channel,
            &mut sender,
            &mut receiver,
            &mut rngs,
            &mut transcript,
            iteration,
        );
        if let Err(e) = step {
            failure = Some(e);
            reason = TerminateReason::Error;
            break;
        }
        iterations += 1;
        center_history.push(receiver.center().clone());
        if sender.converged() {
            reason = TerminateReason::Converged;
            break;
        }
    }

    let last = eval_history.len().saturating_sub(1) as u32;
    let terminate = ProtocolMessage::Terminate {
        iteration: last,
        reason,
    };
    let delivered = transcript.push(&terminate)?;
    receiver.handle(&delivered)?;

    let outcome = SessionOutcome {
        final_params: receiver.center().clone(),
        best: receiver.optimizer().best().map(|(p, c)| (p.clone(), c)),
        iterations,
        reason,
        failure,
        eval_history,
        center_history,
    };
    Ok(Session {
        transcript,
        outcome,
    })
}

fn iterate(
    config: &CalibrationConfig,
    channel: &dyn Channel,
    sender: &mut Sender<'_>,
    receiver: &mut Receiver,
    rngs: &mut Rngs,
    transcript: &mut SessionTranscript,
    iteration: u32,
) -> Result<()> {
    let sent = sender.next_batch().to_vec();
    if config.exact_mode {
        let outputs = sent
            .iter()
            .map(|&s| {
                let received = channel.transmit_exact(sender.outgoing(s))?;
                Ok(receiver.prepare(&received)?.into_exact())
            })
            .collect::<Result<Vec<ExactDetection>>>()?;
        let report = transcript.push(&receiver.report(iteration, Vec::new()))?;
        let ProtocolMessage::MeasurementReport { .. } = report else {
            unreachable!("codec preserves the tag")
        };
        sender.score_exact(&outputs)?;
    } else {
        // a deterministic channel delivers the same state for every copy of
        // a calibration state, so its decoded form is prepared once
        let mut cache: Vec<Option<PreparedMeasurement>> = Vec::new();
        if channel.is_deterministic() {
            cache.resize_with(config.calibration_set.len(), || None);
        }
        let mut records = Vec::with_capacity(sent.len());
        let mut residuals: Vec<Option<DensityMatrix>> = Vec::with_capacity(sent.len());
        let mut fresh;
        for (t, &s) in sent.iter().enumerate() {
            let prepared = if cache.is_empty() {
                let received = channel.transmit(sender.outgoing(s), &mut *rngs.channel)?;
                fresh = receiver.prepare(&received)?;
                &mut fresh
            } else {
                if cache[s].is_none() {
                    cache[s] =
                        Some(receiver.prepare(&channel.transmit_exact(sender.outgoing(s))?)?);
                }
                cache[s].as_mut().expect("filled above")
            };
            let detection = prepared.sample(t as u32, &mut *rngs.receiver)?;
            records.push(detection.record);
            residuals.push(detection.residual);
        }
        let report = transcript.push(&receiver.report(iteration, records))?;
        sender.score_report(&report, &residuals)?;
    }
    let cost_report = sender.cost_report(iteration).expect("cost just recorded");
    let delivered = transcript.push(&cost_report)?;
    receiver.handle(&delivered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{FiberChannel, IdentityChannel, NoiseParams};
    use crate::protocol::{OptimizerConfig, OptimizerKind};
    use crate::qcore::{from_bloch, infidelity};

    fn states() -> Vec<DensityMatrix> {
        vec![
            from_bloch([0.0, 0.0, 1.0]).unwrap(),
            from_bloch([1.0, 0.0, 0.0]).unwrap(),
            from_bloch([0.0, 1.0, 0.0]).unwrap(),
        ]
    }

    fn gd() -> OptimizerConfig {
        OptimizerConfig {
            kind: OptimizerKind::ExactGradientDescent,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_exact_converges_immediately() {
        let mut cfg = CalibrationConfig::new(states(), 1, 50);
        cfg.exact_mode = true;
        cfg.optimizer = gd();
        let streak = cfg.effective_streak(3);
        let s = run_session(&cfg, &IdentityChannel(1), 1).unwrap();
        assert_eq!(s.outcome.reason, TerminateReason::Converged);
        assert!(
            s.outcome.iterations <= streak + 1,
            "{}",
            s.outcome.iterations
        );
        assert!(s.outcome.best_cost().unwrap() < 1e-7);
    }

    #[test]
    fn exact_rotation_is_undone() {
        let params = NoiseParams::new(50.0, 0.05, 0.0, 0.0, vec![[1.1, -2.3, 0.4]]).unwrap();
        let channel = FiberChannel::new(params.clone(), false);
        let mut cfg = CalibrationConfig::new(states(), 1, 400);
        cfg.exact_mode = true;
        cfg.optimizer = gd();
        let s = run_session(&cfg, &channel, 3).unwrap();
        s.outcome.check().unwrap();
        let dec = Decoder::all(1).unwrap();
        let worst = states()
            .iter()
            .map(|st| {
                let out = dec
                    .apply(
                        &channel.transmit_exact(st).unwrap(),
                        &s.outcome.final_params,
                    )
                    .unwrap();
                infidelity(&out, st).unwrap()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn one_iteration_transcript() {
        let cfg = CalibrationConfig::new(states(), 60, 1);
        let s = run_session(&cfg, &IdentityChannel(1), 5).unwrap();
        let msgs = s.transcript.messages().unwrap();
        assert_eq!(msgs.len(), 3);
        assert!(matches!(
            msgs[0],
            (
                Direction::ReceiverToSender,
                ProtocolMessage::MeasurementReport { iteration: 0, .. }
            )
        ));
        assert!(matches!(
            msgs[1],
            (
                Direction::SenderToReceiver,
                ProtocolMessage::CostReport { iteration: 0, .. }
            )
        ));
        assert!(matches!(
            msgs[2].1,
            ProtocolMessage::Terminate {
                reason: TerminateReason::MaxIterations,
                ..
            }
        ));
        assert_eq!(s.transcript.replay().unwrap(), s.transcript);
    }

    #[test]
    fn failures_still_terminate() {
        // two states but one transmission per iteration: a group stays empty
        let cfg = CalibrationConfig::new(states(), 1, 5);
        let s = run_session(&cfg, &IdentityChannel(1), 0).unwrap();
        assert_eq!(s.outcome.reason, TerminateReason::Error);
        assert!(matches!(
            s.outcome.failure,
            Some(Error::EmptyStateGroup { .. })
        ));
        let msgs = s.transcript.messages().unwrap();
        assert!(matches!(
            msgs.last().unwrap().1,
            ProtocolMessage::Terminate {
                reason: TerminateReason::Error,
                ..
            }
        ));
    }

    #[test]
    fn sessions_are_reproducible() {
        let params = NoiseParams::new(70.0, 0.05, 0.05, 0.05, vec![[0.3, 1.0, -2.0]]).unwrap();
        let channel = FiberChannel::new(params, true);
        let cfg = CalibrationConfig::new(states(), 200, 6);
        let a = run_session(&cfg, &channel, 11).unwrap();
        let b = run_session(&cfg, &channel, 11).unwrap();
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.outcome, b.outcome);
    }

    #[test]
    fn mismatched_channel_rejected() {
        let cfg = CalibrationConfig::new(states(), 10, 1);
        assert!(matches!(
            run_session(&cfg, &IdentityChannel(2), 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
