use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::protocol::{run_session, Decoder, ParamVector};
use crate::qcore::{from_bloch, measure_pauli, DensityMatrix, Pauli, PauliString};
use crate::seed::{child_seed, stream_rng, Stream};

use super::{fan_out, item_seed, ResultRow, ScenarioConfig, ScenarioResult};

/// `|0>, |1>, |+>, |->`.
pub fn bb84_states() -> Vec<DensityMatrix> {
    [
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
    ]
    .iter()
    .map(|&r| from_bloch(r).expect("unit Bloch vector"))
    .collect()
}

/// Size of the key-exchange runs used to score a decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bb84Evaluation {
    /// Independent key-exchange runs per trial.
    pub rounds: usize,
    /// Qubits sent per run.
    pub qubits: usize,
}

impl Default for Bb84Evaluation {
    fn default() -> Self {
        Self {
            rounds: 20,
            qubits: 1000,
        }
    }
}

/// Sifted error tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QberCount {
    pub errors: u64,
    pub sifted: u64,
}

impl QberCount {
    pub fn rate(&self) -> Result<f64> {
        if self.sifted == 0 {
            return Err(Error::NothingSifted);
        }
        Ok(self.errors as f64 / self.sifted as f64)
    }
}

/// Prepare-and-measure key exchange over `channel`: random bit and Z/X
/// basis per qubit at the sender, random Z/X basis after the decoder at the
/// receiver, errors counted on matching bases.
pub fn bb84_qber(
    channel: &dyn Channel,
    phi: &ParamVector,
    qubits: usize,
    rng: &mut dyn RngCore,
) -> Result<QberCount> {
    let decoder = Decoder::all(1)?;
    let states = bb84_states();
    let bases = [
        PauliString::new(vec![Pauli::Z]),
        PauliString::new(vec![Pauli::X]),
    ];
    let mut count = QberCount::default();
    for _ in 0..qubits {
        let bit = rng.random_range(0..2usize);
        let send_basis = rng.random_range(0..2usize);
        let recv_basis = rng.random_range(0..2usize);
        let received = channel.transmit(&states[2 * send_basis + bit], rng)?;
        let outcome = measure_pauli(&decoder.apply(&received, phi)?, &bases[recv_basis], rng)?[0];
        if send_basis == recv_basis {
            count.sifted += 1;
            count.errors += u64::from((outcome < 0) != (bit == 1));
        }
    }
    Ok(count)
}

/// Uncalibrated and calibrated QBER over `eval`, with both arms fed the
/// same random choices.
fn evaluate(
    channel: &dyn Channel,
    phi: &ParamVector,
    eval: Bb84Evaluation,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut totals = [QberCount::default(); 2];
    for (arm, params) in [ParamVector::zeros(3), phi.clone()].iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::Evaluation);
        for _ in 0..eval.rounds {
            let c = bb84_qber(channel, params, eval.qubits, &mut rng)?;
            totals[arm].errors += c.errors;
            totals[arm].sifted += c.sifted;
        }
    }
    Ok((totals[0].rate()?, totals[1].rate()?))
}

/// BB84 length sweep: per `(length, trial)` a fresh fiber is drawn, the
/// decoder is calibrated blindly over the four BB84 states, and the QBER is
/// measured with and without it.
pub fn scenario_bb84(config: &ScenarioConfig, eval: Bb84Evaluation) -> Result<ScenarioResult> {
    config.validate()?;
    let rows = fan_out(config, |li, length, trial| {
        let seed = item_seed(config, li, trial);
        let channel = config
            .noise
            .fiber(1, length, &mut stream_rng(seed, Stream::Channel))?;
        let session = run_session(&config.calibration(bb84_states()), &channel, seed)?;
        session.outcome.check()?;
        let (uncal, cal) = evaluate(&channel, &session.outcome.final_params, eval, seed)?;
        Ok(vec![ResultRow {
            length_km: length,
            trial,
            metric: "qber".into(),
            value_uncalibrated: uncal,
            value_calibrated: cal,
            iterations_used: session.outcome.iterations,
            shots: config.shots(),
            seed,
        }])
    })?;
    Ok(ScenarioResult::new("bb84", rows))
}

/// Final QBER as a function of the batch size at one length. Within a trial
/// every batch size sees the same fiber and the same protocol seed.
pub fn scenario_bb84_shots_sweep(
    config: &ScenarioConfig,
    shot_counts: &[usize],
    length_km: f64,
    eval: Bb84Evaluation,
) -> Result<ScenarioResult> {
    config.validate()?;
    if shot_counts.is_empty() || shot_counts.contains(&0) {
        return Err(Error::InvalidConfig("shot counts must be positive".into()));
    }
    let items: Vec<(usize, usize)> = (0..config.trials)
        .flat_map(|t| shot_counts.iter().map(move |&n| (t, n)))
        .collect();
    let rows = items
        .par_iter()
        .map(|&(trial, shots)| {
            let seed = child_seed(config.seed, 0, trial as u64);
            let channel =
                config
                    .noise
                    .fiber(1, length_km, &mut stream_rng(seed, Stream::Channel))?;
            let mut cfg = config.calibration(bb84_states());
            cfg.batch_size = shots;
            let session = run_session(&cfg, &channel, seed)?;
            session.outcome.check()?;
            let (uncal, cal) = evaluate(&channel, &session.outcome.final_params, eval, seed)?;
            Ok(ResultRow {
                length_km,
                trial,
                metric: "qber".into(),
                value_uncalibrated: uncal,
                value_calibrated: cal,
                iterations_used: session.outcome.iterations,
                shots,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult::new("bb84-shots", rows))
}
