//! Benchmark scenarios: random single-qubit states, BB84 length and shot
//! sweeps, entanglement swapping, multipartite GHZ/W distribution and the
//! pooled-tomography blinding check.
//!
//! Work items `(length, trial)` are independent and run in parallel; each
//! derives its own seed with [`child_seed`], so rows do not depend on thread
//! scheduling.

mod bb84;
mod entswap;
mod multipartite;
mod random_states;
mod theorem1;

use rand::Rng;
use rayon::prelude::*;

use crate::channels::{FiberChannel, NoiseParams};
use crate::error::{Error, Result};
use crate::protocol::{CalibrationConfig, CostKind, OptimizerConfig};
use crate::qcore::DensityMatrix;
use crate::seed::child_seed;

pub use bb84::{
    bb84_qber, bb84_states, scenario_bb84, scenario_bb84_shots_sweep, Bb84Evaluation, QberCount,
};
pub use entswap::{entswap_calibration_set, entswap_error_rate, scenario_entswap, swap_once};
pub use multipartite::{scenario_multipartite, MultipartiteKind};
pub use random_states::{random_state_trace, scenario_random_states};
pub use theorem1::{
    antipodal_partner, blinded_set, pooled_trace_distance, scenario_theorem1,
    theorem1_adversary_check,
};

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub length_km: f64,
    pub trial: usize,
    pub metric: String,
    pub value_uncalibrated: f64,
    pub value_calibrated: f64,
    pub iterations_used: usize,
    pub shots: usize,
    pub seed: u64,
}

/// Rows produced by one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: String,
    pub rows: Vec<ResultRow>,
}

impl ScenarioResult {
    pub fn new(scenario: impl Into<String>, mut rows: Vec<ResultRow>) -> Self {
        sort_rows(&mut rows);
        Self {
            scenario: scenario.into(),
            rows,
        }
    }

    /// Rows whose metric equals `metric`.
    pub fn metric<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }
}

/// Sorts by `(length_km, trial, metric, shots)`.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.length_km
            .total_cmp(&b.length_km)
            .then(a.trial.cmp(&b.trial))
            .then_with(|| a.metric.cmp(&b.metric))
            .then(a.shots.cmp(&b.shots))
    });
}

/// Fiber noise coefficients shared by every link in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSettings {
    /// Rotation coefficient, dB/km.
    pub mu: f64,
    /// Bit-flip coefficient, dB/km.
    pub mu1: f64,
    /// Phase-flip coefficient, dB/km.
    pub mu2: f64,
    /// Enables bit- and phase-flip noise.
    pub flips: bool,
    /// One rotation triple for every qubit of a link instead of one each.
    pub shared_rotation: bool,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            mu: 0.05,
            mu1: 0.05,
            mu2: 0.05,
            flips: false,
            shared_rotation: false,
        }
    }
}

impl NoiseSettings {
    /// Draws a fiber of `n_qubits` at `length_km`.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        n_qubits: usize,
        length_km: f64,
        rng: &mut R,
    ) -> Result<NoiseParams> {
        NoiseParams::sample(
            n_qubits,
            length_km,
            self.mu,
            self.mu1,
            self.mu2,
            self.shared_rotation,
            rng,
        )
    }

    pub fn fiber<R: Rng + ?Sized>(
        &self,
        n_qubits: usize,
        length_km: f64,
        rng: &mut R,
    ) -> Result<FiberChannel> {
        Ok(FiberChannel::new(
            self.draw(n_qubits, length_km, rng)?,
            self.flips,
        ))
    }
}

/// Settings common to every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub lengths: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Transmissions per protocol iteration.
    pub batch_size: usize,
    pub i_max: usize,
    pub epsilon_th: f64,
    pub noise: NoiseSettings,
    pub optimizer: OptimizerConfig,
    pub exact_mode: bool,
    pub cost_kind: CostKind,
    pub streak: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lengths: vec![50.0],
            trials: 1,
            seed: 0,
            batch_size: 1000,
            i_max: 250,
            epsilon_th: 1e-7,
            noise: NoiseSettings::default(),
            optimizer: OptimizerConfig::default(),
            exact_mode: false,
            cost_kind: CostKind::InfidelityTomographic,
            streak: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one length is required".into(),
            ));
        }
        if let Some(&l) = self
            .lengths
            .iter()
            .find(|l| !(**l >= 0.0) || !l.is_finite())
        {
            return Err(Error::NegativeParameter {
                name: "length_km",
                value: l,
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        for (name, value) in [
            ("mu", self.noise.mu),
            ("mu1", self.noise.mu1),
            ("mu2", self.noise.mu2),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeParameter { name, value });
            }
        }
        self.optimizer.validate()
    }

    /// Protocol configuration for `calibration_set` under these settings.
    pub fn calibration(&self, calibration_set: Vec<DensityMatrix>) -> CalibrationConfig {
        CalibrationConfig {
            calibration_set,
            batch_size: self.batch_size,
            epsilon_th: self.epsilon_th,
            i_max: self.i_max,
            cost_kind: self.cost_kind,
            optimizer: self.optimizer.clone(),
            exact_mode: self.exact_mode,
            streak: self.streak,
            encoder: None,
        }
    }

    /// Shot count reported in rows: zero in exact mode.
    pub fn shots(&self) -> usize {
        if self.exact_mode {
            0
        } else {
            self.batch_size
        }
    }
}

/// Runs `work(length_index, length, trial)` over every pair in parallel and
/// concatenates the rows.
pub(crate) fn fan_out<F>(config: &ScenarioConfig, work: F) -> Result<Vec<ResultRow>>
where
    F: Fn(usize, f64, usize) -> Result<Vec<ResultRow>> + Sync,
{
    let items: Vec<(usize, f64, usize)> = config
        .lengths
        .iter()
        .enumerate()
        .flat_map(|(li, &l)| (0..config.trials).map(move |t| (li, l, t)))
        .collect();
    let chunks = items
        .par_iter()
        .map(|&(li, l, t)| work(li, l, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub(crate) fn item_seed(config: &ScenarioConfig, length_index: usize, trial: usize) -> u64 {
    child_seed(config.seed, length_index as u64, trial as u64)
}
