//! Final BB84 error rate at 120 km as the per-iteration batch grows, with a
//! budget of 20 iterations.

use blindcal::scenarios::{scenario_bb84_shots_sweep, Bb84Evaluation, ScenarioConfig};

fn main() -> blindcal::error::Result<()> {
    let mut config = ScenarioConfig {
        lengths: vec![120.0],
        trials: 5,
        i_max: 20,
        ..ScenarioConfig::default()
    };
    config.noise.flips = true;
    let shots = [250, 1000, 2000, 10_000];
    let result = scenario_bb84_shots_sweep(&config, &shots, 120.0, Bb84Evaluation::default())?;
    for n in shots {
        let mut q: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.shots == n)
            .map(|r| r.value_calibrated)
            .collect();
        q.sort_by(f64::total_cmp);
        println!("N={n:>6}: median calibrated QBER {:.4}", q[q.len() / 2]);
    }
    Ok(())
}
