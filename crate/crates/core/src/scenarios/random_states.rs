use crate::channels::Channel;
use crate::error::Result;
use crate::protocol::{run_session, CostKind, Decoder, ParamVector};
use crate::qcore::{infidelity, random_pure_qubit, DensityMatrix};
use crate::seed::{stream_rng, Stream};

use super::{fan_out, item_seed, ResultRow, ScenarioConfig, ScenarioResult};

/// States drawn per trial.
const SET_SIZE: usize = 5;

/// Mean exact infidelity of `set` after `channel` and the decoder at each
/// point of `params`.
pub fn random_state_trace(
    set: &[DensityMatrix],
    channel: &dyn Channel,
    params: &[ParamVector],
) -> Result<Vec<f64>> {
    let decoder = Decoder::all(channel.n_qubits())?;
    let received = set
        .iter()
        .map(|s| channel.transmit_exact(s))
        .collect::<Result<Vec<_>>>()?;
    params
        .iter()
        .map(|phi| {
            let mut total = 0.0;
            for (r, s) in received.iter().zip(set) {
                total += infidelity(&decoder.apply(r, phi)?, s)?;
            }
            Ok(total / set.len() as f64)
        })
        .collect()
}

/// Five Haar-random single-qubit states calibrated with the tomographic
/// cost. Rows `infidelity_iter_NNNN` trace the exact mean infidelity of the
/// optimizer center after each iteration; the `infidelity` row holds the
/// first and last values.
pub fn scenario_random_states(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let mut config = config.clone();
    config.cost_kind = CostKind::InfidelityTomographic;
    let rows = fan_out(&config, |li, length, trial| {
        let seed = item_seed(&config, li, trial);
        let mut state_rng = stream_rng(seed, Stream::States);
        let set: Vec<DensityMatrix> = (0..SET_SIZE)
            .map(|_| random_pure_qubit(&mut state_rng))
            .collect();
        let channel = config
            .noise
            .fiber(1, length, &mut stream_rng(seed, Stream::Channel))?;
        let session = run_session(&config.calibration(set.clone()), &channel, seed)?;
        session.outcome.check()?;
        let trace = random_state_trace(&set, &channel, &session.outcome.center_history)?;
        let used = session.outcome.iterations;
        let row = |metric: String, cal: f64| ResultRow {
            length_km: length,
            trial,
            metric,
            value_uncalibrated: trace[0],
            value_calibrated: cal,
            iterations_used: used,
            shots: config.shots(),
            seed,
        };
        let mut rows: Vec<ResultRow> = trace
            .iter()
            .enumerate()
            .map(|(i, &v)| row(format!("infidelity_iter_{i:04}"), v))
            .collect();
        rows.push(row(
            "infidelity".into(),
            *trace.last().expect("initial point present"),
        ));
        Ok(rows)
    })?;
    Ok(ScenarioResult::new("random-states", rows))
}
