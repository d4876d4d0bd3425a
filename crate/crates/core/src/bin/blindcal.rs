use std::path::PathBuf;
use std::process::ExitCode;

use blindcal::harness::{self, HarnessError, Overrides, EXIT_CONFIG};
use clap::Parser;

/// Run a blind-calibration scenario and write its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "blindcal", version)]
struct Cli {
    /// random-states, bb84, bb84-shots, entswap, multipartite-ghz, multipartite-w or theorem1
    scenario: String,
    /// Flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; falls back to the file, then BLINDCAL_SEED
    #[arg(long)]
    seed: Option<u64>,
    /// Lengths in km: a:b:step or a comma list
    #[arg(long)]
    lengths: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Transmissions per iteration
    #[arg(long)]
    shots: Option<usize>,
    /// Maximum protocol iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Cost-change tolerance
    #[arg(long = "eps-th")]
    eps_th: Option<f64>,
    /// Rotation coefficient, dB/km
    #[arg(long)]
    mu: Option<f64>,
    /// Bit-flip coefficient, dB/km
    #[arg(long)]
    mu1: Option<f64>,
    /// Phase-flip coefficient, dB/km
    #[arg(long)]
    mu2: Option<f64>,
    /// infidelity or error-rate
    #[arg(long)]
    cost: Option<String>,
    /// Score exact channel outputs instead of sampled shots
    #[arg(long)]
    exact: bool,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(err: &HarnessError) -> ExitCode {
    eprintln!("blindcal: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let file_text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                return fail(&HarnessError::Config(format!(
                    "config: cannot read {}: {e}",
                    path.display()
                )))
            }
        },
        None => None,
    };
    let overrides = Overrides {
        seed: cli.seed,
        lengths: cli.lengths,
        trials: cli.trials,
        shots: cli.shots,
        iters: cli.iters,
        eps_th: cli.eps_th,
        mu: cli.mu,
        mu1: cli.mu1,
        mu2: cli.mu2,
        cost: cli.cost,
        exact: cli.exact,
        out: cli.out,
    };
    let env_seed = std::env::var("BLINDCAL_SEED").ok();
    let config = match harness::resolve_config(
        &cli.scenario,
        file_text.as_deref(),
        &overrides,
        env_seed.as_deref(),
    ) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match harness::run(&config) {
        Ok(result) => {
            eprintln!(
                "{}: {} rows -> {}",
                config.scenario,
                result.rows.len(),
                config.output_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
