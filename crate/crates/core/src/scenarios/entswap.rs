use rand::RngCore;

use crate::channels::{Channel, FiberChannel, LinkSet};
use crate::error::Result;
use crate::protocol::{
    run_session_with, BellErrorRate, CostFunction, CostKind, Decoder, DetectorKind, ParamVector,
    PreparedMeasurement, SessionSetup,
};
use crate::qcore::{bell_measurement, bell_state, BellIndex, DensityMatrix};
use crate::seed::{stream_rng, Stream};

use super::{fan_out, item_seed, ResultRow, ScenarioConfig, ScenarioResult};

const REGISTER: usize = 4;
const MIDPOINT: (usize, usize) = (1, 2);

/// The sender's Bell pair on qubits 0-1 next to the receiver's Φ⁺ on 2-3,
/// one register per Bell index in [`BellIndex::ALL`] order.
pub fn entswap_calibration_set() -> Vec<DensityMatrix> {
    let anchor = bell_state(BellIndex::PHI_PLUS);
    BellIndex::ALL
        .iter()
        .map(|&b| bell_state(b).kron(&anchor).expect("two two-qubit states"))
        .collect()
}

fn midpoint_decoder() -> Decoder {
    Decoder::new(REGISTER, vec![MIDPOINT.0, MIDPOINT.1]).expect("fixed layout")
}

fn detector() -> DetectorKind {
    DetectorKind::Bell {
        q1: MIDPOINT.0,
        q2: MIDPOINT.1,
    }
}

fn cost() -> BellErrorRate {
    BellErrorRate::new(BellIndex::ALL.to_vec())
}

/// One swap: prepare `sent`, cross the links, decode and Bell-measure at the
/// midpoint, correct, and Bell-measure the endpoint pair.
pub fn swap_once(
    sent: BellIndex,
    links: &dyn Channel,
    phi: &ParamVector,
    rng: &mut dyn RngCore,
) -> Result<BellIndex> {
    let input = entswap_calibration_set().swap_remove(sent.ordinal());
    let received = links.transmit(&input, rng)?;
    let decoded = midpoint_decoder().apply(&received, phi)?;
    let detection = PreparedMeasurement::new(detector(), decoded)?.sample(0, rng)?;
    let (b1, b2) = (
        detection.record.outcomes[0] < 0,
        detection.record.outcomes[1] < 0,
    );
    let pair = detection.residual.expect("two endpoint qubits remain");
    let corrected =
        crate::protocol::swap_correction(&pair, BellIndex::new(u8::from(b1), u8::from(b2))?)?;
    Ok(bell_measurement(&corrected, 0, 1, rng)?.0)
}

/// Expected Bell-index error rate over the four inputs under the averaged
/// link noise.
pub fn entswap_error_rate(links: &dyn Channel, phi: &ParamVector) -> Result<f64> {
    let set = entswap_calibration_set();
    let decoder = midpoint_decoder();
    let outputs = set
        .iter()
        .map(|s| {
            let decoded = decoder.apply(&links.transmit_exact(s)?, phi)?;
            Ok(PreparedMeasurement::new(detector(), decoded)?.into_exact())
        })
        .collect::<Result<Vec<_>>>()?;
    cost().exact(&set, &outputs)
}

/// Entanglement swapping through a calibrated midpoint. Each trial draws one
/// fiber for the sender's second qubit and one for the receiver's first;
/// the midpoint trains a rotation per incoming qubit against the endpoints'
/// Bell-index error rate.
pub fn scenario_entswap(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let mut config = config.clone();
    config.cost_kind = CostKind::ErrorRate;
    let rows = fan_out(&config, |li, length, trial| {
        let seed = item_seed(&config, li, trial);
        let mut rng = stream_rng(seed, Stream::Channel);
        let a = config.noise.draw(1, length, &mut rng)?;
        let b = config.noise.draw(1, length, &mut rng)?;
        let links = LinkSet(vec![
            FiberChannel::on_qubits(a, config.noise.flips, REGISTER, vec![MIDPOINT.0])?,
            FiberChannel::on_qubits(b, config.noise.flips, REGISTER, vec![MIDPOINT.1])?,
        ]);
        let cost = cost();
        let setup = SessionSetup {
            channel: &links,
            decoder: midpoint_decoder(),
            detector: detector(),
            cost: &cost,
        };
        let session =
            run_session_with(&config.calibration(entswap_calibration_set()), setup, seed)?;
        session.outcome.check()?;
        Ok(vec![ResultRow {
            length_km: length,
            trial,
            metric: "bell_error_rate".into(),
            value_uncalibrated: entswap_error_rate(&links, &ParamVector::zeros(6))?,
            value_calibrated: entswap_error_rate(&links, &session.outcome.final_params)?,
            iterations_used: session.outcome.iterations,
            shots: config.shots(),
            seed,
        }])
    })?;
    Ok(ScenarioResult::new("entswap", rows))
}
