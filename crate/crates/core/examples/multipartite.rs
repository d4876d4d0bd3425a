//! GHZ and W states sent qubit by qubit over independent 50 km fibers,
//! calibrated with exact costs and Nelder-Mead.

use blindcal::protocol::OptimizerKind;
use blindcal::scenarios::{scenario_multipartite, MultipartiteKind, ScenarioConfig};

fn main() -> blindcal::error::Result<()> {
    let mut config = ScenarioConfig {
        trials: 2,
        exact_mode: true,
        i_max: 2000,
        ..ScenarioConfig::default()
    };
    config.optimizer.kind = OptimizerKind::NelderMead;
    for kind in [MultipartiteKind::Ghz, MultipartiteKind::W] {
        for row in &scenario_multipartite(kind, &[2, 3, 4], &config)?.rows {
            println!(
                "{} {} trial {}: infidelity {:.4} -> {:.2e}",
                kind.name(),
                row.metric,
                row.trial,
                row.value_uncalibrated,
                row.value_calibrated
            );
        }
    }
    Ok(())
}
