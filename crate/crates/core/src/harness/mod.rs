//! Run configuration, scenario dispatch and CSV output for the `blindcal`
//! command.
//!
//! Config files are flat UTF-8 `key = value` text with `#` comments. Keys:
//!
//! | key | meaning |
//! |---|---|
//! | `seed` | run seed (u64) |
//! | `lengths` | `a:b:step` or comma list, km |
//! | `trials` | trials per length |
//! | `shots` | transmissions per iteration |
//! | `i_max`, `epsilon_th`, `streak` | stopping rule |
//! | `mu`, `mu1`, `mu2` | rotation, bit-flip, phase-flip coefficients, dB/km |
//! | `flips`, `shared_rotation` | noise switches |
//! | `cost` | `infidelity` or `error-rate` |
//! | `exact` | exact-cost mode |
//! | `optimizer` | `spsa`, `nelder-mead` or `gradient-descent` |
//! | `spsa_a`, `spsa_c`, `spsa_big_a`, `spsa_alpha`, `spsa_gamma`, `step_size`, `fd_step` | optimizer settings |
//! | `eval_rounds`, `eval_qubits` | BB84 evaluation size |
//! | `shot_counts` | batch sizes for `bb84-shots` |
//! | `n_range` | `a:b` or list of register sizes for the multipartite runs |
//! | `transmissions` | pooled counts for `theorem1` |
//! | `out` | CSV path |

mod config;
mod csv;

use std::path::PathBuf;

use crate::qcore::from_bloch;
use crate::scenarios::{
    scenario_bb84, scenario_bb84_shots_sweep, scenario_entswap, scenario_multipartite,
    scenario_random_states, scenario_theorem1, MultipartiteKind, ScenarioResult,
};

pub use config::{
    default_run_config, parse_key_values, parse_lengths, resolve_config, Overrides, RunConfig,
    ScenarioName, KEYS,
};
pub use csv::{format_sig9, to_csv_string, write_csv, CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(#[from] crate::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Run(_) | HarnessError::Io { .. } => EXIT_RUNTIME,
        }
    }
}

/// Runs the configured scenario and returns its rows.
pub fn run_scenario(config: &RunConfig) -> Result<ScenarioResult, HarnessError> {
    let sc = &config.scenario_config;
    let result = match config.scenario {
        ScenarioName::RandomStates => scenario_random_states(sc)?,
        ScenarioName::Bb84 => scenario_bb84(sc, config.eval)?,
        ScenarioName::Bb84Shots => {
            scenario_bb84_shots_sweep(sc, &config.shot_counts, sc.lengths[0], config.eval)?
        }
        ScenarioName::Entswap => scenario_entswap(sc)?,
        ScenarioName::MultipartiteGhz => {
            scenario_multipartite(MultipartiteKind::Ghz, &config.n_range, sc)?
        }
        ScenarioName::MultipartiteW => {
            scenario_multipartite(MultipartiteKind::W, &config.n_range, sc)?
        }
        ScenarioName::Theorem1 => {
            let s_p = vec![from_bloch([0.0, 0.0, 1.0])?, from_bloch([1.0, 0.0, 0.0])?];
            scenario_theorem1(&s_p, &config.transmissions, sc.trials, sc.seed)?
        }
    };
    Ok(result)
}

/// Runs and writes the CSV to `config.output_path`.
pub fn run(config: &RunConfig) -> Result<ScenarioResult, HarnessError> {
    let result = run_scenario(config)?;
    write_csv(&result, &config.output_path)?;
    Ok(result)
}
