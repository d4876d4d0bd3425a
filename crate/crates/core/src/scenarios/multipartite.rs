use rayon::prelude::*;

use crate::channels::{Channel, FiberChannel};
use crate::error::{Error, Result};
use crate::protocol::{run_session, CostKind, Decoder, ParamVector};
use crate::qcore::{ghz_state, infidelity, w_state, DensityMatrix};
use crate::seed::{child_seed, stream_rng, Stream};

use super::{ResultRow, ScenarioConfig, ScenarioResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultipartiteKind {
    Ghz,
    W,
}

impl MultipartiteKind {
    pub fn state(self, n: usize) -> Result<DensityMatrix> {
        match self {
            MultipartiteKind::Ghz => ghz_state(n),
            MultipartiteKind::W => w_state(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MultipartiteKind::Ghz => "multipartite-ghz",
            MultipartiteKind::W => "multipartite-w",
        }
    }
}

fn exact_infidelity(
    target: &DensityMatrix,
    channel: &dyn Channel,
    phi: &ParamVector,
) -> Result<f64> {
    let decoded = Decoder::all(target.n_qubits())?.apply(&channel.transmit_exact(target)?, phi)?;
    infidelity(&decoded, target)
}

/// Distribution of an `n`-qubit GHZ or W state where every qubit crosses
/// its own rotating fiber. Flip noise is never applied here. Rows
/// `infidelity_n{n}` hold the exact infidelity before and after calibration.
pub fn scenario_multipartite(
    kind: MultipartiteKind,
    n_range: &[usize],
    config: &ScenarioConfig,
) -> Result<ScenarioResult> {
    config.validate()?;
    if n_range.is_empty() {
        return Err(Error::InvalidConfig("qubit range is empty".into()));
    }
    if let Some(&n) = n_range.iter().find(|&&n| !(2..=5).contains(&n)) {
        return Err(Error::UnsupportedQubitCount(n));
    }
    let mut config = config.clone();
    config.cost_kind = CostKind::InfidelityTomographic;
    let items: Vec<(usize, f64, usize, usize)> = config
        .lengths
        .iter()
        .enumerate()
        .flat_map(|(li, &l)| {
            let trials = config.trials;
            n_range
                .iter()
                .flat_map(move |&n| (0..trials).map(move |t| (li, l, n, t)))
        })
        .collect();
    let rows = items
        .par_iter()
        .map(|&(li, length, n, trial)| {
            let seed = child_seed(config.seed, ((li as u64) << 8) | n as u64, trial as u64);
            let target = kind.state(n)?;
            let params = config
                .noise
                .draw(n, length, &mut stream_rng(seed, Stream::Channel))?;
            let channel = FiberChannel::new(params, false);
            let session = run_session(&config.calibration(vec![target.clone()]), &channel, seed)?;
            session.outcome.check()?;
            Ok(ResultRow {
                length_km: length,
                trial,
                metric: format!("infidelity_n{n}"),
                value_uncalibrated: exact_infidelity(
                    &target,
                    &channel,
                    &ParamVector::zeros(3 * n),
                )?,
                value_calibrated: exact_infidelity(
                    &target,
                    &channel,
                    &session.outcome.final_params,
                )?,
                iterations_used: session.outcome.iterations,
                shots: config.shots(),
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult::new(kind.name(), rows))
}
