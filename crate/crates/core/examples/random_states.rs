//! Calibrating a 50 km fiber against five random qubit states, with exact
//! costs and with 15000 shots per iteration.

use blindcal::scenarios::{scenario_random_states, ScenarioConfig};

fn main() -> blindcal::error::Result<()> {
    for (label, exact_mode, batch_size) in [("exact", true, 1000), ("sampled", false, 15_000)] {
        let config = ScenarioConfig {
            trials: 3,
            exact_mode,
            batch_size,
            ..ScenarioConfig::default()
        };
        let result = scenario_random_states(&config)?;
        for row in result.metric("infidelity") {
            println!(
                "{label:>7} trial {}: infidelity {:.4} -> {:.2e} in {} iterations",
                row.trial, row.value_uncalibrated, row.value_calibrated, row.iterations_used
            );
        }
    }
    Ok(())
}
