use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::protocol::{CostKind, OptimizerKind};
use crate::scenarios::{Bb84Evaluation, ScenarioConfig};

use super::HarnessError;

/// Scenarios the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    RandomStates,
    Bb84,
    Bb84Shots,
    Entswap,
    MultipartiteGhz,
    MultipartiteW,
    Theorem1,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::RandomStates,
        ScenarioName::Bb84,
        ScenarioName::Bb84Shots,
        ScenarioName::Entswap,
        ScenarioName::MultipartiteGhz,
        ScenarioName::MultipartiteW,
        ScenarioName::Theorem1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::RandomStates => "random-states",
            ScenarioName::Bb84 => "bb84",
            ScenarioName::Bb84Shots => "bb84-shots",
            ScenarioName::Entswap => "entswap",
            ScenarioName::MultipartiteGhz => "multipartite-ghz",
            ScenarioName::MultipartiteW => "multipartite-w",
            ScenarioName::Theorem1 => "theorem1",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ScenarioName::ALL.iter().map(|n| n.as_str()).collect();
                HarnessError::Config(format!(
                    "unknown scenario '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

/// Everything needed to run one scenario and write its CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub scenario_config: ScenarioConfig,
    /// BB84 evaluation size.
    pub eval: Bb84Evaluation,
    /// Batch sizes swept by `bb84-shots`.
    pub shot_counts: Vec<usize>,
    /// Register sizes for the multipartite scenarios.
    pub n_range: Vec<usize>,
    /// Pooled transmission counts for `theorem1`.
    pub transmissions: Vec<usize>,
    pub output_path: PathBuf,
}

/// Values given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lengths: Option<String>,
    pub trials: Option<usize>,
    pub shots: Option<usize>,
    pub iters: Option<usize>,
    pub eps_th: Option<f64>,
    pub mu: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub cost: Option<String>,
    pub exact: bool,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("lengths", self.lengths.clone());
        push("trials", self.trials.map(|v| v.to_string()));
        push("shots", self.shots.map(|v| v.to_string()));
        push("i_max", self.iters.map(|v| v.to_string()));
        push("epsilon_th", self.eps_th.map(|v| v.to_string()));
        push("mu", self.mu.map(|v| v.to_string()));
        push("mu1", self.mu1.map(|v| v.to_string()));
        push("mu2", self.mu2.map(|v| v.to_string()));
        push("cost", self.cost.clone());
        push("exact", self.exact.then(|| "true".to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        out
    }
}

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &[
    "seed",
    "lengths",
    "trials",
    "shots",
    "i_max",
    "epsilon_th",
    "mu",
    "mu1",
    "mu2",
    "cost",
    "exact",
    "out",
    "flips",
    "shared_rotation",
    "streak",
    "optimizer",
    "spsa_a",
    "spsa_c",
    "spsa_big_a",
    "spsa_alpha",
    "spsa_gamma",
    "step_size",
    "fd_step",
    "eval_rounds",
    "eval_qubits",
    "shot_counts",
    "n_range",
    "transmissions",
];

/// Splits flat `key = value` text into pairs. `#` starts a comment; blank
/// lines are skipped; a repeated key keeps its last value.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, HarnessError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(HarnessError::Config(format!(
                "line {}: unknown key '{key}'",
                i + 1
            )));
        }
        pairs.retain(|(k, _)| k != key);
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Expands `a:b:step` (inclusive) or a comma list into lengths in km.
pub fn parse_lengths(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if !(step > 0.0) || !(stop >= start) || !step.is_finite() {
                return Err(format!(
                    "range '{spec}' needs start <= stop and a positive step"
                ));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(format!("range '{spec}' has too many points"));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [_] => parse_list(spec, parse_f64),
        _ => Err(format!("'{spec}' is neither a:b:step nor a comma list")),
    }
}

/// Expands `a:b` (inclusive) or a comma list of integers.
fn parse_usize_range(spec: &str) -> Result<Vec<usize>, String> {
    match spec.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (parse_usize(a.trim())?, parse_usize(b.trim())?);
            if a > b {
                return Err(format!("range '{spec}' is empty"));
            }
            Ok((a..=b).collect())
        }
        None => parse_list(spec, parse_usize),
    }
}

fn parse_list<T>(spec: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let values = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("'{s}' is not a non-negative integer"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("'{s}' is not a boolean")),
    }
}

fn non_negative(v: f64) -> Result<f64, String> {
    if v < 0.0 {
        return Err(format!("{v} is negative"));
    }
    Ok(v)
}

fn positive_usize(v: usize) -> Result<usize, String> {
    if v == 0 {
        return Err("must be at least 1".into());
    }
    Ok(v)
}

/// Defaults for `scenario` before any file, flag or environment value.
pub fn default_run_config(scenario: ScenarioName) -> RunConfig {
    let mut sc = ScenarioConfig {
        trials: 50,
        ..ScenarioConfig::default()
    };
    let sweep: Vec<f64> = (1..=13).map(|i| 10.0 * i as f64).collect();
    match scenario {
        ScenarioName::RandomStates => {
            sc.lengths = vec![50.0];
            sc.batch_size = 15_000;
        }
        ScenarioName::Bb84 | ScenarioName::Entswap => sc.lengths = sweep,
        ScenarioName::Bb84Shots => {
            sc.lengths = vec![120.0];
            sc.i_max = 20;
            sc.noise.flips = true;
        }
        ScenarioName::MultipartiteGhz | ScenarioName::MultipartiteW => {
            sc.lengths = sweep;
            sc.batch_size = 20_000;
        }
        ScenarioName::Theorem1 => sc.lengths = vec![0.0],
    }
    RunConfig {
        scenario,
        scenario_config: sc,
        eval: Bb84Evaluation::default(),
        shot_counts: vec![250, 500, 1000, 2000, 5000, 10_000],
        n_range: vec![2, 3, 4, 5],
        transmissions: vec![1000, 10_000, 100_000],
        output_path: PathBuf::from(format!("{scenario}.csv")),
    }
}

/// Builds a validated [`RunConfig`]. Precedence, lowest first: scenario
/// defaults, `env_seed` (the `BLINDCAL_SEED` value), the config file text,
/// command-line overrides.
pub fn resolve_config(
    scenario: &str,
    file_text: Option<&str>,
    overrides: &Overrides,
    env_seed: Option<&str>,
) -> Result<RunConfig, HarnessError> {
    let scenario: ScenarioName = scenario.parse()?;
    let mut config = default_run_config(scenario);
    if let Some(seed) = env_seed {
        apply(&mut config, "BLINDCAL_SEED", seed)?;
    }
    if let Some(text) = file_text {
        for (k, v) in parse_key_values(text)? {
            apply(&mut config, &k, &v)?;
        }
    }
    for (k, v) in overrides.pairs() {
        apply(&mut config, k, &v)?;
    }
    validate(&config)?;
    Ok(config)
}

fn apply(config: &mut RunConfig, key: &str, value: &str) -> Result<(), HarnessError> {
    set(config, key, value).map_err(|msg| HarnessError::Config(format!("{key}: {msg}")))
}

fn set(config: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    let sc = &mut config.scenario_config;
    let opt = &mut sc.optimizer;
    match key {
        "seed" | "BLINDCAL_SEED" => {
            sc.seed = value
                .parse()
                .map_err(|_| format!("'{value}' is not a 64-bit unsigned integer"))?
        }
        "lengths" => {
            sc.lengths = parse_lengths(value)?
                .into_iter()
                .map(non_negative)
                .collect::<Result<_, _>>()?
        }
        "trials" => sc.trials = positive_usize(parse_usize(value)?)?,
        "shots" => sc.batch_size = positive_usize(parse_usize(value)?)?,
        "i_max" => sc.i_max = positive_usize(parse_usize(value)?)?,
        "epsilon_th" => sc.epsilon_th = non_negative(parse_f64(value)?)?,
        "mu" => sc.noise.mu = non_negative(parse_f64(value)?)?,
        "mu1" => sc.noise.mu1 = non_negative(parse_f64(value)?)?,
        "mu2" => sc.noise.mu2 = non_negative(parse_f64(value)?)?,
        "cost" => {
            sc.cost_kind = match value {
                "infidelity" => CostKind::InfidelityTomographic,
                "error-rate" => CostKind::ErrorRate,
                _ => return Err(format!("'{value}' is not one of infidelity, error-rate")),
            }
        }
        "exact" => sc.exact_mode = parse_bool(value)?,
        "out" => {
            if value.is_empty() {
                return Err("empty path".into());
            }
            config.output_path = PathBuf::from(value);
        }
        "flips" => sc.noise.flips = parse_bool(value)?,
        "shared_rotation" => sc.noise.shared_rotation = parse_bool(value)?,
        "streak" => sc.streak = Some(positive_usize(parse_usize(value)?)?),
        "optimizer" => {
            opt.kind = match value {
                "spsa" => OptimizerKind::Spsa,
                "nelder-mead" => OptimizerKind::NelderMead,
                "gradient-descent" => OptimizerKind::ExactGradientDescent,
                _ => {
                    return Err(format!(
                        "'{value}' is not one of spsa, nelder-mead, gradient-descent"
                    ))
                }
            }
        }
        "spsa_a" => opt.a = parse_f64(value)?,
        "spsa_c" => opt.c = parse_f64(value)?,
        "spsa_big_a" => opt.big_a = parse_f64(value)?,
        "spsa_alpha" => opt.alpha_exp = parse_f64(value)?,
        "spsa_gamma" => opt.gamma_exp = parse_f64(value)?,
        "step_size" => opt.step_size = parse_f64(value)?,
        "fd_step" => opt.fd_step = parse_f64(value)?,
        "eval_rounds" => config.eval.rounds = positive_usize(parse_usize(value)?)?,
        "eval_qubits" => config.eval.qubits = positive_usize(parse_usize(value)?)?,
        "shot_counts" => {
            config.shot_counts = parse_list(value, parse_usize)?
                .into_iter()
                .map(positive_usize)
                .collect::<Result<_, _>>()?
        }
        "n_range" => {
            let n = parse_usize_range(value)?;
            if let Some(bad) = n.iter().find(|n| !(2..=5).contains(*n)) {
                return Err(format!("{bad} is outside 2..5"));
            }
            config.n_range = n;
        }
        "transmissions" => {
            config.transmissions = parse_list(value, parse_usize)?
                .into_iter()
                .map(positive_usize)
                .collect::<Result<_, _>>()?
        }
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

fn validate(config: &RunConfig) -> Result<(), HarnessError> {
    let sc = &config.scenario_config;
    sc.optimizer
        .validate()
        .map_err(|e| HarnessError::Config(format!("optimizer: {e}")))?;
    sc.validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    if config.scenario == ScenarioName::Bb84Shots && sc.lengths.len() != 1 {
        return Err(HarnessError::Config(
            "lengths: bb84-shots takes exactly one length".into(),
        ));
    }
    if config.scenario == ScenarioName::Bb84Shots && sc.exact_mode {
        return Err(HarnessError::Config(
            "exact: bb84-shots sweeps the batch size and needs sampled mode".into(),
        ));
    }
    Ok(())
}
