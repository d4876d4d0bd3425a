//! Fiber noise: a static, length-scaled rotation per qubit plus independent
//! bit- and phase-flips whose probabilities grow with length.

use std::f64::consts::PI;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::qcore::{apply_1q, rot_unitary, DensityMatrix, Unitary};

/// Fraction of the channel effect accumulated over `length_km` at `mu` dB/km:
/// `1 - 10^(-mu·L/10)`.
pub fn length_to_prob(mu: f64, length_km: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::NegativeParameter {
            name: "mu",
            value: mu,
        });
    }
    if !(length_km >= 0.0) {
        return Err(Error::NegativeParameter {
            name: "length_km",
            value: length_km,
        });
    }
    Ok(1.0 - 10f64.powf(-mu * length_km / 10.0))
}

/// Length at which `length_to_prob(mu, L)` reaches 1/2.
pub fn half_probability_length(mu: f64) -> f64 {
    10.0 * 2f64.log10() / mu
}

/// Channel coefficients for one fiber instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub length_km: f64,
    /// Rotation coefficient, dB/km.
    pub mu_rot: f64,
    /// Bit-flip coefficient, dB/km.
    pub mu_bit: f64,
    /// Phase-flip coefficient, dB/km.
    pub mu_phase: f64,
    /// Full-strength miscalibration `(alpha, beta, gamma)` per qubit, radians.
    pub theta_r: Vec<[f64; 3]>,
}

impl NoiseParams {
    pub fn new(
        length_km: f64,
        mu_rot: f64,
        mu_bit: f64,
        mu_phase: f64,
        theta_r: Vec<[f64; 3]>,
    ) -> Result<Self> {
        for (name, value) in [
            ("length_km", length_km),
            ("mu_rot", mu_rot),
            ("mu_bit", mu_bit),
            ("mu_phase", mu_phase),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeParameter { name, value });
            }
        }
        if theta_r.iter().flatten().any(|t| !(t.abs() <= PI)) {
            return Err(Error::InvalidConfig(
                "theta_R angles must lie in [-pi, pi]".into(),
            ));
        }
        Ok(Self {
            length_km,
            mu_rot,
            mu_bit,
            mu_phase,
            theta_r,
        })
    }

    /// Draws `theta_R` uniformly on `[-pi, pi]^3` per qubit, or one triple
    /// shared by every qubit when `shared` is set.
    pub fn sample<R: Rng + ?Sized>(
        n_qubits: usize,
        length_km: f64,
        mu_rot: f64,
        mu_bit: f64,
        mu_phase: f64,
        shared: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let mut draw = || -> [f64; 3] { std::array::from_fn(|_| rng.random_range(-PI..=PI)) };
        let theta_r = if shared {
            vec![draw(); n_qubits]
        } else {
            (0..n_qubits).map(|_| draw()).collect()
        };
        Self::new(length_km, mu_rot, mu_bit, mu_phase, theta_r)
    }

    pub fn n_qubits(&self) -> usize {
        self.theta_r.len()
    }

    pub fn p_rot(&self) -> f64 {
        length_to_prob(self.mu_rot, self.length_km).expect("validated")
    }

    pub fn p_bit(&self) -> f64 {
        length_to_prob(self.mu_bit, self.length_km).expect("validated")
    }

    pub fn p_phase(&self) -> f64 {
        length_to_prob(self.mu_phase, self.length_km).expect("validated")
    }

    /// Per-qubit rotation actually applied: `rot(p·alpha, p·beta, p·gamma)`.
    pub fn rotations(&self) -> Vec<Unitary> {
        let p = self.p_rot();
        self.theta_r
            .iter()
            .map(|t| rot_unitary(p * t[0], p * t[1], p * t[2]))
            .collect()
    }

    /// Per-qubit decoder angles that exactly undo [`NoiseParams::rotations`].
    pub fn inverse_angles(&self) -> Vec<f64> {
        let p = self.p_rot();
        self.theta_r
            .iter()
            .flat_map(|t| [-p * t[2], -p * t[1], -p * t[0]])
            .collect()
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { name, value });
    }
    Ok(())
}

/// Deterministic per-qubit rotation by the length-scaled `theta_R`.
pub fn rotational_channel(rho: &DensityMatrix, params: &NoiseParams) -> Result<DensityMatrix> {
    if params.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.n_qubits(),
            found: params.n_qubits(),
        });
    }
    let mut out = rho.clone();
    let n = rho.n_qubits();
    for (q, u) in params.rotations().iter().enumerate() {
        apply_1q(out.data_mut(), n, u.as_slice(), q);
    }
    Ok(out)
}

/// In-place `X ρ X` on qubit `q`.
fn conj_x(rho: &mut DensityMatrix, q: usize) {
    let n = rho.n_qubits();
    let dim = rho.dim();
    let bit = 1usize << (n - 1 - q);
    let data = rho.data_mut();
    for r in 0..dim {
        for c in 0..dim {
            let (r2, c2) = (r ^ bit, c ^ bit);
            if (r, c) < (r2, c2) {
                data.swap(r * dim + c, r2 * dim + c2);
            }
        }
    }
}

/// In-place `Z ρ Z` on qubit `q`.
fn conj_z(rho: &mut DensityMatrix, q: usize) {
    let n = rho.n_qubits();
    let dim = rho.dim();
    let bit = 1usize << (n - 1 - q);
    let data = rho.data_mut();
    for r in 0..dim {
        for c in 0..dim {
            if ((r & bit) != 0) != ((c & bit) != 0) {
                data[r * dim + c] = -data[r * dim + c];
            }
        }
    }
}

fn mix_in_place(rho: &mut DensityMatrix, p: f64, q: usize, conj: fn(&mut DensityMatrix, usize)) {
    if p == 0.0 {
        return;
    }
    let mut flipped = rho.clone();
    conj(&mut flipped, q);
    for (a, b) in rho.data_mut().iter_mut().zip(flipped.as_slice()) {
        *a = *a * (1.0 - p) + *b * p;
    }
}

fn flip_exact_on(rho: &mut DensityMatrix, p_b: f64, p_p: f64, targets: &[usize]) {
    for &q in targets {
        mix_in_place(rho, p_b, q, conj_x);
        mix_in_place(rho, p_p, q, conj_z);
    }
}

fn flip_sampled_on(
    rho: &mut DensityMatrix,
    p_b: f64,
    p_p: f64,
    targets: &[usize],
    rng: &mut dyn RngCore,
) {
    for &q in targets {
        if p_b > 0.0 && rng.random::<f64>() < p_b {
            conj_x(rho, q);
        }
        if p_p > 0.0 && rng.random::<f64>() < p_p {
            conj_z(rho, q);
        }
    }
}

/// Per qubit: `ρ → (1-p_b)ρ + p_b XρX`, then `ρ → (1-p_p)ρ + p_p ZρZ`.
pub fn flip_channel_exact(rho: &DensityMatrix, p_b: f64, p_p: f64) -> Result<DensityMatrix> {
    check_prob("p_b", p_b)?;
    check_prob("p_p", p_p)?;
    let mut out = rho.clone();
    let targets: Vec<usize> = (0..rho.n_qubits()).collect();
    flip_exact_on(&mut out, p_b, p_p, &targets);
    Ok(out)
}

/// Per qubit: apply X with probability `p_b`, then Z with probability `p_p`.
pub fn flip_channel_sampled<R: Rng>(
    rho: &DensityMatrix,
    p_b: f64,
    p_p: f64,
    rng: &mut R,
) -> Result<DensityMatrix> {
    check_prob("p_b", p_b)?;
    check_prob("p_p", p_p)?;
    let mut out = rho.clone();
    let targets: Vec<usize> = (0..rho.n_qubits()).collect();
    flip_sampled_on(&mut out, p_b, p_p, &targets, rng);
    Ok(out)
}

/// Transmissions needed for `n` detections at efficiency `eta`: `ceil(n/eta)`.
pub fn expected_transmissions(n: u64, eta: f64) -> Result<u64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::EfficiencyOutOfRange(eta));
    }
    let exact = n as f64 / eta;
    // guard against 1000/0.5 = 2000.0000000000002 style round-off
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 * exact.max(1.0) {
        Ok(rounded as u64)
    } else {
        Ok(exact.ceil() as u64)
    }
}

/// A quantum channel in both shot-sampled and exact (CPTP mixture) form.
pub trait Channel: Send + Sync {
    /// Register size the channel expects.
    fn n_qubits(&self) -> usize;

    /// One transmission with sampled stochastic noise.
    fn transmit(&self, rho: &DensityMatrix, rng: &mut dyn RngCore) -> Result<DensityMatrix>;

    /// The averaged channel.
    fn transmit_exact(&self, rho: &DensityMatrix) -> Result<DensityMatrix>;

    /// True when `transmit` ignores the RNG and equals `transmit_exact`.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Noise-free channel on `n` qubits.
#[derive(Debug, Clone, Copy)]
pub struct IdentityChannel(pub usize);

impl Channel for IdentityChannel {
    fn n_qubits(&self) -> usize {
        self.0
    }

    fn transmit(&self, rho: &DensityMatrix, _rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        self.transmit_exact(rho)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn transmit_exact(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.0 {
            return Err(Error::DimensionMismatch {
                expected: self.0,
                found: rho.n_qubits(),
            });
        }
        Ok(rho.clone())
    }
}

/// A fiber acting on selected qubits of a register: rotation, then bit-flip,
/// then phase-flip on each target.
#[derive(Debug, Clone)]
pub struct FiberChannel {
    params: NoiseParams,
    flips: bool,
    register: usize,
    targets: Vec<usize>,
    rotations: Vec<Unitary>,
}

impl FiberChannel {
    /// Fiber on every qubit of a register sized by `params`.
    pub fn new(params: NoiseParams, flips: bool) -> Self {
        let n = params.n_qubits();
        Self::on_qubits(params, flips, n, (0..n).collect()).expect("targets cover the register")
    }

    /// Fiber on `targets` of an `register`-qubit system; `params.theta_r`
    /// supplies one triple per target.
    pub fn on_qubits(
        params: NoiseParams,
        flips: bool,
        register: usize,
        targets: Vec<usize>,
    ) -> Result<Self> {
        if params.n_qubits() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                found: params.n_qubits(),
            });
        }
        crate::qcore::DensityMatrix::maximally_mixed(register)?;
        if let Some(&bad) = targets.iter().find(|&&t| t >= register) {
            return Err(Error::QubitOutOfRange {
                qubit: bad,
                n_qubits: register,
            });
        }
        let rotations = params.rotations();
        Ok(Self {
            params,
            flips,
            register,
            targets,
            rotations,
        })
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn has_flips(&self) -> bool {
        self.flips
    }

    fn rotate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.register {
            return Err(Error::DimensionMismatch {
                expected: self.register,
                found: rho.n_qubits(),
            });
        }
        let mut out = rho.clone();
        if self.params.p_rot() > 0.0 {
            for (u, &q) in self.rotations.iter().zip(&self.targets) {
                apply_1q(out.data_mut(), self.register, u.as_slice(), q);
            }
        }
        Ok(out)
    }
}

impl Channel for FiberChannel {
    fn n_qubits(&self) -> usize {
        self.register
    }

    fn transmit(&self, rho: &DensityMatrix, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        let mut out = self.rotate(rho)?;
        if self.flips {
            flip_sampled_on(
                &mut out,
                self.params.p_bit(),
                self.params.p_phase(),
                &self.targets,
                rng,
            );
        }
        Ok(out)
    }

    fn transmit_exact(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = self.rotate(rho)?;
        if self.flips {
            flip_exact_on(
                &mut out,
                self.params.p_bit(),
                self.params.p_phase(),
                &self.targets,
            );
        }
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        !self.flips || (self.params.p_bit() == 0.0 && self.params.p_phase() == 0.0)
    }
}

/// Several fibers applied in sequence to one register.
#[derive(Debug, Clone)]
pub struct LinkSet(pub Vec<FiberChannel>);

impl Channel for LinkSet {
    fn n_qubits(&self) -> usize {
        self.0.first().map_or(0, |c| c.n_qubits())
    }

    fn transmit(&self, rho: &DensityMatrix, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        let mut state = rho.clone();
        for link in &self.0 {
            state = link.transmit(&state, rng)?;
        }
        Ok(state)
    }

    fn transmit_exact(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut state = rho.clone();
        for link in &self.0 {
            state = link.transmit_exact(&state)?;
        }
        Ok(state)
    }

    fn is_deterministic(&self) -> bool {
        self.0.iter().all(Channel::is_deterministic)
    }
}
