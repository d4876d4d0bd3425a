//! BB84 error rate before and after blind calibration, with and without
//! flip noise.

use blindcal::scenarios::{scenario_bb84, Bb84Evaluation, ScenarioConfig};

fn main() -> blindcal::error::Result<()> {
    for flips in [false, true] {
        let mut config = ScenarioConfig {
            lengths: vec![25.0, 50.0, 100.0],
            trials: 4,
            ..ScenarioConfig::default()
        };
        config.noise.flips = flips;
        let result = scenario_bb84(
            &config,
            Bb84Evaluation {
                rounds: 5,
                qubits: 1000,
            },
        )?;
        println!("flip noise: {flips}");
        for l in &config.lengths {
            let rows: Vec<_> = result.rows.iter().filter(|r| r.length_km == *l).collect();
            let mean = |f: fn(&&blindcal::scenarios::ResultRow) -> f64| {
                rows.iter().map(f).sum::<f64>() / rows.len() as f64
            };
            println!(
                "  L={l:>5} km  QBER uncalibrated {:.4}  calibrated {:.4}",
                mean(|r| r.value_uncalibrated),
                mean(|r| r.value_calibrated)
            );
        }
    }
    Ok(())
}
