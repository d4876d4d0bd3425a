//! Ask/tell optimizers driven by one scalar cost per protocol iteration.
//!
//! Each optimizer exposes the point it wants evaluated next; the engine sets
//! the decoder there, runs one batch, and feeds the resulting cost back.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, SimRng};

use super::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Spsa,
    NelderMead,
    ExactGradientDescent,
}

/// Gains and step settings. Only the fields relevant to `kind` are read.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// SPSA step gain `a`.
    pub a: f64,
    /// SPSA perturbation gain `c`.
    pub c: f64,
    /// SPSA stability constant `A`.
    pub big_a: f64,
    pub alpha_exp: f64,
    pub gamma_exp: f64,
    /// Gradient-descent base step; also the initial Nelder-Mead simplex edge.
    pub step_size: f64,
    /// Central-difference half-width for gradient descent.
    pub fd_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Spsa,
            a: 6.0,
            c: 0.15,
            big_a: 10.0,
            alpha_exp: 0.602,
            gamma_exp: 0.101,
            step_size: 0.5,
            fd_step: 1e-4,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.a > 0.0 && self.c > 0.0) {
            return bad("optimizer gains a and c must be positive");
        }
        if !(self.alpha_exp > 0.0
            && self.alpha_exp <= 1.0
            && self.gamma_exp > 0.0
            && self.gamma_exp <= 1.0)
        {
            return bad("gain exponents must lie in (0, 1]");
        }
        if !(self.big_a >= 0.0) {
            return bad("stability constant A must be non-negative");
        }
        if !(self.step_size > 0.0 && self.fd_step > 0.0) {
            return bad("step sizes must be positive");
        }
        Ok(())
    }

    /// SPSA gains `(a_k, c_k) = (a/(A+k+1)^alpha, c/(k+1)^gamma)`.
    pub fn gains(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        (
            self.a / (self.big_a + k + 1.0).powf(self.alpha_exp),
            self.c / (k + 1.0).powf(self.gamma_exp),
        )
    }

    /// Consecutive evaluations that may return equal costs without the
    /// search having stalled, for `dim` parameters.
    pub fn flat_window(&self, dim: usize) -> usize {
        match self.kind {
            OptimizerKind::Spsa => 2,
            OptimizerKind::NelderMead => dim + 1,
            OptimizerKind::ExactGradientDescent => 2 * dim,
        }
    }

    pub fn build(&self, initial: ParamVector, seed: u64) -> Result<Box<dyn Optimizer>> {
        self.validate()?;
        Ok(match self.kind {
            OptimizerKind::Spsa => Box::new(Spsa::new(self.clone(), initial, seed)),
            OptimizerKind::NelderMead => Box::new(NelderMead::new(initial, self.step_size)),
            OptimizerKind::ExactGradientDescent => {
                Box::new(GradientDescent::new(initial, self.step_size, self.fd_step))
            }
        })
    }
}

/// Stateful parameter update driven by scalar costs.
pub trait Optimizer: Send {
    /// Point whose cost should be measured next.
    fn evaluation_point(&self) -> &ParamVector;

    /// Current estimate of the minimizer.
    fn center(&self) -> &ParamVector;

    /// Consumes the cost measured at [`Optimizer::evaluation_point`].
    fn tell(&mut self, cost: f64) -> Result<()>;

    /// Lowest cost seen so far and where it was measured.
    fn best(&self) -> Option<(&ParamVector, f64)>;

    /// Completed parameter updates.
    fn updates(&self) -> usize;
}

/// Result of one [`optimizer_update`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStep {
    pub center: ParamVector,
    pub evaluate_at: ParamVector,
}

/// Feeds `cost` to `opt` and reports its new center and next query point.
pub fn optimizer_update(opt: &mut dyn Optimizer, cost: f64) -> Result<UpdateStep> {
    opt.tell(cost)?;
    Ok(UpdateStep {
        center: opt.center().clone(),
        evaluate_at: opt.evaluation_point().clone(),
    })
}

fn check_finite(cost: f64) -> Result<()> {
    if cost.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteCost(cost))
    }
}

#[derive(Debug, Clone, Default)]
struct BestSeen {
    best: Option<(ParamVector, f64)>,
}

impl BestSeen {
    fn record(&mut self, at: &ParamVector, cost: f64) {
        if self.best.as_ref().is_none_or(|(_, c)| cost < *c) {
            self.best = Some((at.clone(), cost));
        }
    }

    fn get(&self) -> Option<(&ParamVector, f64)> {
        self.best.as_ref().map(|(p, c)| (p, *c))
    }
}

/// Simultaneous-perturbation stochastic approximation.
///
/// One gradient estimate spans two evaluations, at `φ + c_k Δ` and
/// `φ - c_k Δ` with Rademacher `Δ`; then `φ ← φ - a_k ĝ`.
#[derive(Debug, Clone)]
pub struct Spsa {
    config: OptimizerConfig,
    rng: SimRng,
    center: ParamVector,
    delta: Vec<f64>,
    k: usize,
    plus_cost: Option<f64>,
    eval: ParamVector,
    best: BestSeen,
}

impl Spsa {
    pub fn new(config: OptimizerConfig, initial: ParamVector, seed: u64) -> Self {
        let mut s = Self {
            config,
            rng: rng_from_seed(seed),
            center: initial.clone(),
            delta: Vec::new(),
            k: 0,
            plus_cost: None,
            eval: initial,
            best: BestSeen::default(),
        };
        s.perturb();
        s
    }

    fn perturb(&mut self) {
        let rng = &mut self.rng;
        self.delta = (0..self.center.len())
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        self.eval = self.offset(1.0);
    }

    fn offset(&self, sign: f64) -> ParamVector {
        let (_, ck) = self.config.gains(self.k);
        ParamVector::new(
            self.center
                .iter()
                .zip(&self.delta)
                .map(|(x, d)| x + sign * ck * d)
                .collect(),
        )
    }
}

impl Optimizer for Spsa {
    fn evaluation_point(&self) -> &ParamVector {
        &self.eval
    }

    fn center(&self) -> &ParamVector {
        &self.center
    }

    fn tell(&mut self, cost: f64) -> Result<()> {
        check_finite(cost)?;
        self.best.record(&self.eval, cost);
        match self.plus_cost.take() {
            None => {
                self.plus_cost = Some(cost);
                self.eval = self.offset(-1.0);
            }
            Some(plus) => {
                let (ak, ck) = self.config.gains(self.k);
                let diff = plus - cost;
                let next: Vec<f64> = self
                    .center
                    .iter()
                    .zip(&self.delta)
                    .map(|(x, d)| x - ak * diff / (2.0 * ck * d))
                    .collect();
                self.center = ParamVector::new(next);
                self.k += 1;
                self.perturb();
            }
        }
        Ok(())
    }

    fn best(&self) -> Option<(&ParamVector, f64)> {
        self.best.get()
    }

    fn updates(&self) -> usize {
        self.k
    }
}

/// Quasi-Newton descent on central finite differences. The inverse Hessian
/// is built with BFGS updates, starting from `step_size` times the identity.
/// A step that fails the Armijo test is halved and retried from the
/// previous center.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    step_size: f64,
    h: f64,
    center: ParamVector,
    eval: ParamVector,
    coord: usize,
    plus: Option<f64>,
    grad: Vec<f64>,
    center_cost: f64,
    /// Row-major inverse Hessian estimate.
    h_inv: Vec<f64>,
    scaled: bool,
    /// Last accepted center with its gradient, cost and search direction.
    anchor: Option<Anchor>,
    updates: usize,
    best: BestSeen,
}

#[derive(Debug, Clone)]
struct Anchor {
    x: ParamVector,
    grad: Vec<f64>,
    cost: f64,
    dir: Vec<f64>,
    t: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl GradientDescent {
    pub fn new(initial: ParamVector, step_size: f64, h: f64) -> Self {
        let dim = initial.len();
        let mut gd = Self {
            step_size,
            h,
            center: initial.clone(),
            eval: initial,
            coord: 0,
            plus: None,
            grad: vec![0.0; dim],
            center_cost: f64::NAN,
            h_inv: Self::scaled_identity(dim, step_size),
            scaled: false,
            anchor: None,
            updates: 0,
            best: BestSeen::default(),
        };
        gd.eval = gd.probe(1.0);
        gd
    }

    fn scaled_identity(dim: usize, s: f64) -> Vec<f64> {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = s;
        }
        m
    }

    fn probe(&self, sign: f64) -> ParamVector {
        let mut p = self.center.clone();
        p.values_mut()[self.coord] += sign * self.h;
        p
    }

    fn step_from(x: &ParamVector, dir: &[f64], t: f64) -> ParamVector {
        ParamVector::new(x.iter().zip(dir).map(|(x, d)| x + t * d).collect())
    }

    /// BFGS update of the inverse Hessian from the anchor to the current center.
    fn update_inverse_hessian(&mut self) {
        let Some(anchor) = &self.anchor else {
            return;
        };
        let n = self.grad.len();
        let s: Vec<f64> = self
            .center
            .iter()
            .zip(anchor.x.iter())
            .map(|(a, b)| a - b)
            .collect();
        let y: Vec<f64> = self
            .grad
            .iter()
            .zip(&anchor.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy <= 0.0 {
            // negative curvature along the last step: lengthen the next one
            self.h_inv.iter_mut().for_each(|v| *v *= 2.0);
            return;
        }
        // skip updates that would lose positive definiteness
        if !(sy > 1e-10 * dot(&s, &s).sqrt() * yy.sqrt()) {
            return;
        }
        if !self.scaled {
            self.h_inv = Self::scaled_identity(n, sy / yy);
            self.scaled = true;
        }
        let rho = 1.0 / sy;
        let hy: Vec<f64> = (0..n)
            .map(|i| dot(&self.h_inv[i * n..(i + 1) * n], &y))
            .collect();
        let yhy = dot(&y, &hy);
        for i in 0..n {
            for j in 0..n {
                self.h_inv[i * n + j] +=
                    (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }

    fn direction(&mut self) -> Vec<f64> {
        let n = self.grad.len();
        let dir: Vec<f64> = (0..n)
            .map(|i| -dot(&self.h_inv[i * n..(i + 1) * n], &self.grad))
            .collect();
        if dot(&dir, &self.grad) < 0.0 {
            return dir;
        }
        self.h_inv = Self::scaled_identity(n, self.step_size);
        self.scaled = false;
        self.grad.iter().map(|g| -self.step_size * g).collect()
    }

    /// Halves the last step when the new center fails the sufficient
    /// decrease test. Returns true if the center moved back.
    fn backtrack(&mut self) -> bool {
        let Some(anchor) = &mut self.anchor else {
            return false;
        };
        let slope = dot(&anchor.grad, &anchor.dir);
        if !(self.center_cost > anchor.cost + 1e-4 * anchor.t * slope) || anchor.t < 1e-9 {
            return false;
        }
        anchor.t *= 0.5;
        self.center = Self::step_from(&anchor.x, &anchor.dir, anchor.t);
        true
    }
}

impl Optimizer for GradientDescent {
    fn evaluation_point(&self) -> &ParamVector {
        &self.eval
    }

    fn center(&self) -> &ParamVector {
        &self.center
    }

    fn tell(&mut self, cost: f64) -> Result<()> {
        check_finite(cost)?;
        self.best.record(&self.eval, cost);
        if self.center.is_empty() {
            return Ok(());
        }
        let Some(plus) = self.plus.take() else {
            self.plus = Some(cost);
            self.eval = self.probe(-1.0);
            return Ok(());
        };
        self.grad[self.coord] = (plus - cost) / (2.0 * self.h);
        if self.coord == 0 {
            // the probe midpoint estimates the center cost to O(h^2)
            self.center_cost = 0.5 * (plus + cost);
            if self.backtrack() {
                self.eval = self.probe(1.0);
                return Ok(());
            }
        }
        self.coord += 1;
        if self.coord == self.center.len() {
            self.update_inverse_hessian();
            let dir = self.direction();
            let x = self.center.clone();
            self.center = Self::step_from(&x, &dir, 1.0);
            self.anchor = Some(Anchor {
                x,
                grad: self.grad.clone(),
                cost: self.center_cost,
                dir,
                t: 1.0,
            });
            self.coord = 0;
            self.updates += 1;
        }
        self.eval = self.probe(1.0);
        Ok(())
    }

    fn best(&self) -> Option<(&ParamVector, f64)> {
        self.best.get()
    }

    fn updates(&self) -> usize {
        self.updates
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NmPhase {
    Init(usize),
    Reflect,
    Expand { reflected: f64 },
    ContractOutside { reflected: f64 },
    ContractInside,
    Shrink(usize),
}

/// Ask/tell Nelder-Mead with dimension-adapted coefficients: reflection 1,
/// expansion `1+2/n`, contraction `3/4-1/(2n)`, shrink `1-1/n`, which reduce
/// to (1, 2, 1/2, 1/2) for two parameters.
#[derive(Debug, Clone)]
pub struct NelderMead {
    simplex: Vec<(ParamVector, f64)>,
    phase: NmPhase,
    eval: ParamVector,
    reflected_point: ParamVector,
    expand: f64,
    contract: f64,
    shrink: f64,
    updates: usize,
    best: BestSeen,
}

impl NelderMead {
    pub fn new(initial: ParamVector, edge: f64) -> Self {
        let dim = initial.len();
        let mut simplex = vec![(initial.clone(), f64::NAN)];
        for i in 0..dim {
            let mut v = initial.clone();
            v.values_mut()[i] += edge;
            simplex.push((v, f64::NAN));
        }
        let n = dim.max(2) as f64;
        Self {
            eval: initial.clone(),
            simplex,
            phase: NmPhase::Init(0),
            reflected_point: initial,
            expand: 1.0 + 2.0 / n,
            contract: 0.75 - 0.5 / n,
            shrink: 1.0 - 1.0 / n,
            updates: 0,
            best: BestSeen::default(),
        }
    }

    fn sort(&mut self) {
        self.simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    }

    fn centroid(&self) -> Vec<f64> {
        let n = self.simplex.len() - 1;
        let dim = self.simplex[0].0.len();
        let mut c = vec![0.0; dim];
        for (v, _) in &self.simplex[..n] {
            for (ci, vi) in c.iter_mut().zip(v.iter()) {
                *ci += vi / n as f64;
            }
        }
        c
    }

    /// `centroid + t·(centroid - worst)`.
    fn along(&self, t: f64) -> ParamVector {
        let c = self.centroid();
        let worst = &self.simplex.last().expect("non-empty").0;
        ParamVector::new(
            c.iter()
                .zip(worst.iter())
                .map(|(ci, wi)| ci + t * (ci - wi))
                .collect(),
        )
    }

    fn start_iteration(&mut self) {
        self.sort();
        self.updates += 1;
        self.reflected_point = self.along(1.0);
        self.eval = self.reflected_point.clone();
        self.phase = NmPhase::Reflect;
    }

    fn replace_worst(&mut self, p: ParamVector, f: f64) {
        *self.simplex.last_mut().expect("non-empty") = (p, f);
        self.start_iteration();
    }

    fn begin_shrink(&mut self) {
        self.sort();
        let best = self.simplex[0].0.clone();
        let shrink = self.shrink;
        for (v, f) in self.simplex.iter_mut().skip(1) {
            *v = ParamVector::new(
                best.iter()
                    .zip(v.iter())
                    .map(|(b, x)| b + shrink * (x - b))
                    .collect(),
            );
            *f = f64::NAN;
        }
        if self.simplex.len() > 1 {
            self.phase = NmPhase::Shrink(1);
            self.eval = self.simplex[1].0.clone();
        } else {
            self.start_iteration();
        }
    }
}

impl Optimizer for NelderMead {
    fn evaluation_point(&self) -> &ParamVector {
        &self.eval
    }

    fn center(&self) -> &ParamVector {
        self.best
            .get()
            .map(|(p, _)| p)
            .unwrap_or(&self.simplex[0].0)
    }

    fn tell(&mut self, cost: f64) -> Result<()> {
        check_finite(cost)?;
        self.best.record(&self.eval, cost);
        let n = self.simplex.len() - 1;
        match self.phase {
            NmPhase::Init(i) => {
                self.simplex[i].1 = cost;
                if i + 1 < self.simplex.len() {
                    self.phase = NmPhase::Init(i + 1);
                    self.eval = self.simplex[i + 1].0.clone();
                } else {
                    self.start_iteration();
                }
            }
            NmPhase::Reflect => {
                let (best, second_worst, worst) = (
                    self.simplex[0].1,
                    self.simplex[n.saturating_sub(1)].1,
                    self.simplex[n].1,
                );
                if cost < best {
                    self.eval = self.along(self.expand);
                    self.phase = NmPhase::Expand { reflected: cost };
                } else if cost < second_worst {
                    let p = self.reflected_point.clone();
                    self.replace_worst(p, cost);
                } else if cost < worst {
                    self.eval = self.along(self.contract);
                    self.phase = NmPhase::ContractOutside { reflected: cost };
                } else {
                    self.eval = self.along(-self.contract);
                    self.phase = NmPhase::ContractInside;
                }
            }
            NmPhase::Expand { reflected } => {
                if cost < reflected {
                    let p = self.eval.clone();
                    self.replace_worst(p, cost);
                } else {
                    let p = self.reflected_point.clone();
                    self.replace_worst(p, reflected);
                }
            }
            NmPhase::ContractOutside { reflected } => {
                if cost <= reflected {
                    let p = self.eval.clone();
                    self.replace_worst(p, cost);
                } else {
                    self.begin_shrink();
                }
            }
            NmPhase::ContractInside => {
                if cost < self.simplex[n].1 {
                    let p = self.eval.clone();
                    self.replace_worst(p, cost);
                } else {
                    self.begin_shrink();
                }
            }
            NmPhase::Shrink(i) => {
                self.simplex[i].1 = cost;
                if i + 1 < self.simplex.len() {
                    self.phase = NmPhase::Shrink(i + 1);
                    self.eval = self.simplex[i + 1].0.clone();
                } else {
                    self.start_iteration();
                }
            }
        }
        Ok(())
    }

    fn best(&self) -> Option<(&ParamVector, f64)> {
        self.best.get()
    }

    fn updates(&self) -> usize {
        self.updates
    }
}
