//! Private rescaling perceptron for homogeneous systems with positive margin.
//!
//! [`solve`] runs up to `τ` epochs. Each epoch either finds a point that
//! violates few constraints, proposes a rescaling direction, or gives up.

use log::warn;

use crate::error::{Error, Result};
use crate::lp::{self, dot, norm, HomogeneousLp, RescalingState};
use crate::mechanisms::{
    calibrate_epoch_noise, gaussian_vector, noisy_count, CompositionLedger, EpochNoise, PrivacyBudget, SeededRng,
};
use crate::rational::{self, Q};

/// Switches for individual noise sources. Everything is on by default;
/// turning sources off is meant for tests and non-private baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseOverride {
    pub laplace: bool,
    pub update_noise: bool,
    pub rescale_noise: bool,
    pub count_shift: bool,
    /// Replaces the calibrated threshold `ν`.
    pub nu: Option<f64>,
}

impl Default for NoiseOverride {
    fn default() -> Self {
        Self { laplace: true, update_noise: true, rescale_noise: true, count_shift: true, nu: None }
    }
}

impl NoiseOverride {
    /// All noise off with threshold 0.5, i.e. the plain rescaling perceptron
    /// that stops only once nothing is violated.
    pub fn noiseless() -> Self {
        Self { laplace: false, update_noise: false, rescale_noise: false, count_shift: false, nu: Some(0.5) }
    }

    pub fn is_private(&self) -> bool {
        *self == Self::default()
    }
}

/// Loop-length knobs: `T = ⌈c_t·d²⌉`, `τ = ⌈c_tau·d·ln(1/ρ₀)⌉`, and the
/// multiplier on the calibrated `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronConfig {
    pub c_t: f64,
    pub c_tau: f64,
    pub c_nu: f64,
    pub noise: NoiseOverride,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        Self { c_t: 1.0, c_tau: 10.0, c_nu: 1.0, noise: NoiseOverride::default() }
    }
}

/// Everything an epoch needs, derived once per solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronConstants {
    pub d: usize,
    /// Perceptron-phase iterations per epoch.
    pub t: usize,
    /// Maximum number of epochs.
    pub tau: usize,
    /// Rescaling-phase attempts per epoch.
    pub rescale_tries: usize,
    /// Calibrated noise, before overrides.
    pub calibrated: EpochNoise,
    pub noise: NoiseOverride,
}

impl PerceptronConstants {
    pub fn new(d: usize, rho0: f64, budget: &PrivacyBudget, cfg: &PerceptronConfig) -> Result<Self> {
        budget.validate()?;
        if d == 0 {
            return Err(Error::EmptyInstance);
        }
        if !(rho0 > 0.0 && rho0 < 1.0) {
            return Err(Error::InvalidSpec(format!("rho0 must lie in (0, 1), got {rho0}")));
        }
        if !(cfg.c_t > 0.0 && cfg.c_tau > 0.0) {
            return Err(Error::InvalidSpec("C_T and C_tau must be positive".into()));
        }
        let t = ((cfg.c_t * (d * d) as f64).ceil() as usize).max(1);
        let tau = ((cfg.c_tau * d as f64 * (1.0 / rho0).ln()).ceil() as usize).max(1);
        let rescale_tries = ((1000.0 * (tau as f64 / budget.beta).ln()).ceil() as usize).max(1);
        let calibrated = calibrate_epoch_noise(d, t, tau, budget, cfg.c_nu)?;
        Ok(Self { d, t, tau, rescale_tries, calibrated, noise: cfg.noise })
    }

    pub fn nu(&self) -> f64 {
        self.noise.nu.unwrap_or(self.calibrated.nu)
    }

    pub fn shift(&self) -> f64 {
        if self.noise.count_shift {
            self.calibrated.laplace_shift
        } else {
            0.0
        }
    }

    /// Minimum norm of an emitted rescaling direction, `3/(16√(πd))`.
    pub fn emission_threshold(&self) -> f64 {
        emission_threshold(self.d)
    }

    /// Violation bound for a returned point that holds with probability
    /// `1 - β`: `ν + (1/ε)ln(1/β) + (1/ε)ln(2000·T·ln(1/β)/δ)`.
    pub fn solution_violation_bound(&self, budget: &PrivacyBudget) -> f64 {
        let PrivacyBudget { epsilon: eps, delta, beta } = *budget;
        self.nu() + (1.0 / beta).ln() / eps + (2000.0 * self.t as f64 * (1.0 / beta).ln() / delta).ln() / eps
    }
}

pub fn emission_threshold(d: usize) -> f64 {
    3.0 / (16.0 * (std::f64::consts::PI * d as f64).sqrt())
}

/// Result of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum EpochOutcome {
    Solution(Vec<f64>),
    RescaleDirection(Vec<f64>),
    Bottom,
}

/// Non-private trace of an epoch, for tests and invariant checks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochDiagnostics {
    /// `m` at each executed perceptron iteration.
    pub violated_counts: Vec<usize>,
    /// Iterates `x⁽¹⁾, x⁽²⁾, ...` up to the last one computed.
    pub iterates: Vec<Vec<f64>>,
    /// Sum of `λ` after the perceptron phase.
    pub lambda_mass: f64,
    /// `max |λĀ − (x − Ση)|` over coordinates.
    pub lambda_identity_error: f64,
    /// Iterations with `‖x⁽ᵗ⁾‖ > 10√t`.
    pub norm_bound_exceeded: usize,
    /// Rescaling attempts made.
    pub rescale_attempts: usize,
}

const PHASE_PERCEPTRON: u64 = 0;
const PHASE_RESCALE: u64 = 1;

pub fn epoch(
    h: &HomogeneousLp,
    budget: &PrivacyBudget,
    consts: &PerceptronConstants,
    rng: &SeededRng,
    epoch_index: u64,
) -> Result<EpochOutcome> {
    epoch_with_diagnostics(h, budget, consts, rng, epoch_index).map(|(o, _)| o)
}

/// One epoch. Randomness comes from two substreams of `rng` keyed by
/// `(epoch_index, phase)`, and every iteration consumes a fixed number of
/// draws so runs on neighbouring inputs stay aligned.
pub fn epoch_with_diagnostics(
    h: &HomogeneousLp,
    budget: &PrivacyBudget,
    consts: &PerceptronConstants,
    rng: &SeededRng,
    epoch_index: u64,
) -> Result<(EpochOutcome, EpochDiagnostics)> {
    let d = h.dim();
    if d != consts.d {
        return Err(Error::DimensionMismatch { expected: consts.d, found: d });
    }
    let n = h.n();
    let eps = budget.epsilon;
    let nu = consts.nu();
    let shift = consts.shift();
    let sigma = consts.calibrated.sigma_sq.sqrt();
    let theta = consts.calibrated.theta_sq.sqrt();
    let noise = consts.noise;

    let mut diag = EpochDiagnostics::default();
    let mut prng = rng.substream(&[epoch_index, PHASE_PERCEPTRON]);
    let mut x = vec![0.0; d];
    let mut lambda = vec![0.0; n];
    let mut noise_sum = vec![0.0; d];

    for t in 1..=consts.t {
        diag.iterates.push(x.clone());
        if norm(&x) > 10.0 * (t as f64).sqrt() {
            diag.norm_bound_exceeded += 1;
            warn!("iterate norm {} exceeds 10*sqrt({t})", norm(&x));
        }
        let s = lp::violated_set(h, &x);
        let m = s.len();
        diag.violated_counts.push(m);
        let m_hat = noisy_count(&mut prng, m, eps, shift, noise.laplace)?;
        let gamma = if noise.update_noise { gaussian_vector(&mut prng, d, sigma)? } else { vec![0.0; d] };
        if m_hat <= nu {
            finish_diagnostics(&mut diag, h, &lambda, &x, &noise_sum);
            return Ok((EpochOutcome::Solution(x), diag));
        }
        let u = audit::average_rows(h, &s);
        for j in 0..d {
            x[j] += u[j] + gamma[j];
            noise_sum[j] += gamma[j];
        }
        if m > 0 {
            let w = 1.0 / m as f64;
            for &i in &s {
                lambda[i] += w;
            }
        }
    }
    diag.iterates.push(x.clone());
    finish_diagnostics(&mut diag, h, &lambda, &x, &noise_sum);

    let lambda_bar: Vec<f64> = lambda.iter().map(|l| l / consts.t as f64).collect();
    let threshold = consts.emission_threshold();
    let mut rrng = rng.substream(&[epoch_index, PHASE_RESCALE]);
    for _ in 0..consts.rescale_tries {
        diag.rescale_attempts += 1;
        let g = gaussian_vector(&mut rrng, d, 1.0)?;
        let gamma = if noise.rescale_noise { gaussian_vector(&mut rrng, d, theta)? } else { vec![0.0; d] };
        let mut c = audit::rescale_direction(h, &lambda_bar, &g);
        for (cj, gj) in c.iter_mut().zip(&gamma) {
            *cj += gj;
        }
        if norm(&c) >= threshold {
            return Ok((EpochOutcome::RescaleDirection(c), diag));
        }
    }
    Ok((EpochOutcome::Bottom, diag))
}

fn finish_diagnostics(diag: &mut EpochDiagnostics, h: &HomogeneousLp, lambda: &[f64], x: &[f64], noise_sum: &[f64]) {
    diag.lambda_mass = lambda.iter().sum();
    let combo = audit::weighted_rows(h, lambda);
    diag.lambda_identity_error =
        combo.iter().zip(x.iter().zip(noise_sum)).map(|(c, (xi, ni))| (c - (xi - ni)).abs()).fold(0.0, f64::max);
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerceptronStatus {
    /// A point in the original coordinates.
    Feasible(Vec<f64>),
    Bottom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronResult {
    pub status: PerceptronStatus,
    pub epochs_used: usize,
    pub ledger: CompositionLedger,
    pub rescaling: RescalingState,
    /// Largest λ identity residual seen over all epochs.
    pub lambda_identity_error: f64,
}

pub fn solve(
    h: &HomogeneousLp,
    rho0: f64,
    budget: &PrivacyBudget,
    cfg: &PerceptronConfig,
    rng: &SeededRng,
) -> Result<PerceptronResult> {
    solve_observed(h, rho0, budget, cfg, rng, |_, _, _| {})
}

/// [`solve`], calling `observe(current_system, outcome, diagnostics)` after
/// every epoch.
pub fn solve_observed(
    h: &HomogeneousLp,
    rho0: f64,
    budget: &PrivacyBudget,
    cfg: &PerceptronConfig,
    rng: &SeededRng,
    mut observe: impl FnMut(&HomogeneousLp, &EpochOutcome, &EpochDiagnostics),
) -> Result<PerceptronResult> {
    let consts = PerceptronConstants::new(h.dim(), rho0, budget, cfg)?;
    let mut current = h.clone();
    let mut state = RescalingState::identity(h.dim());
    let mut ledger = CompositionLedger::new();
    let mut worst_identity: f64 = 0.0;

    for e in 0..consts.tau {
        charge_epoch(&mut ledger, &consts, budget)?;
        let (outcome, diag) = epoch_with_diagnostics(&current, budget, &consts, rng, e as u64)?;
        worst_identity = worst_identity.max(diag.lambda_identity_error);
        observe(&current, &outcome, &diag);
        match outcome {
            EpochOutcome::Solution(y) => {
                let x = state.apply_inverse_map(&y)?;
                return Ok(PerceptronResult {
                    status: PerceptronStatus::Feasible(x),
                    epochs_used: e + 1,
                    ledger,
                    rescaling: state,
                    lambda_identity_error: worst_identity,
                });
            }
            EpochOutcome::RescaleDirection(c) => {
                current = lp::rescale(&current, &c)?;
                state.push(&c)?;
            }
            EpochOutcome::Bottom => {
                return Ok(PerceptronResult {
                    status: PerceptronStatus::Bottom,
                    epochs_used: e + 1,
                    ledger,
                    rescaling: state,
                    lambda_identity_error: worst_identity,
                });
            }
        }
    }
    Ok(PerceptronResult {
        status: PerceptronStatus::Bottom,
        epochs_used: consts.tau,
        ledger,
        rescaling: state,
        lambda_identity_error: worst_identity,
    })
}

/// Ledger entries for one epoch: `T` perceptron iterations at
/// `(ε, δ/(2T))`, and the rescaling phase, whose `(dε)`-mechanism is booked
/// as `d²` unit-`ε` invocations sharing `δ/2`.
pub fn charge_epoch(
    ledger: &mut CompositionLedger,
    consts: &PerceptronConstants,
    budget: &PrivacyBudget,
) -> Result<()> {
    charge_epochs(ledger, consts.d, consts.t, budget, 1.0)
}

/// [`charge_epoch`] for a (possibly fractional) number of epochs.
pub fn charge_epochs(
    ledger: &mut CompositionLedger,
    d: usize,
    t: usize,
    budget: &PrivacyBudget,
    epochs: f64,
) -> Result<()> {
    let d2 = (d * d) as f64;
    let t = t as f64;
    ledger.push(budget.epsilon, budget.delta / (2.0 * t), t * epochs)?;
    ledger.push(budget.epsilon, budget.delta / (2.0 * d2), d2 * epochs)
}

/// Number of rows with `<ā_i, x̄> <= 0`, evaluated exactly on the binary
/// values of the inputs. `x = 0` violates every row.
pub fn count_violations(h: &HomogeneousLp, x: &[f64]) -> usize {
    if x.iter().all(|&v| v == 0.0) {
        return h.n();
    }
    let xq: Vec<Q> = x.iter().map(|&v| rational::from_f64_exact(v)).collect();
    h.rows()
        .iter()
        .filter(|row| {
            let approx = dot(row, x);
            let scale: f64 = row.iter().zip(x).map(|(a, b)| (a * b).abs()).sum();
            // Far from zero the float sign is already certain.
            if approx.abs() > 1e-9 * scale {
                return approx <= 0.0;
            }
            let rq: Vec<Q> = row.iter().map(|&v| rational::from_f64_exact(v)).collect();
            !num_traits::Signed::is_positive(&rational::dot(&rq, &xq))
        })
        .count()
}

/// Pure building blocks of an epoch, exposed so sensitivity checks can
/// evaluate them on neighbouring inputs along a fixed public trajectory.
pub mod audit {
    use super::*;

    /// `(1/|S|) Σ_{i∈S} ā_i`, or zero when `S` is empty.
    pub fn average_rows(h: &HomogeneousLp, s: &[usize]) -> Vec<f64> {
        let mut u = vec![0.0; h.dim()];
        if s.is_empty() {
            return u;
        }
        for &i in s {
            for (uj, aj) in u.iter_mut().zip(h.row(i)) {
                *uj += aj;
            }
        }
        let m = s.len() as f64;
        u.iter_mut().for_each(|v| *v /= m);
        u
    }

    /// `u` and `m` at iterate `x`.
    pub fn update_direction(h: &HomogeneousLp, x: &[f64]) -> (Vec<f64>, usize) {
        let s = lp::violated_set(h, x);
        (average_rows(h, &s), s.len())
    }

    /// `Σ_i w_i ā_i`.
    pub fn weighted_rows(h: &HomogeneousLp, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; h.dim()];
        for (row, &wi) in h.rows().iter().zip(w) {
            if wi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += wi * a;
                }
            }
        }
        out
    }

    /// λ after running the update rule along `trajectory`.
    pub fn lambda_along(h: &HomogeneousLp, trajectory: &[Vec<f64>]) -> Vec<f64> {
        let mut lambda = vec![0.0; h.n()];
        for x in trajectory {
            let s = lp::violated_set(h, x);
            if !s.is_empty() {
                let w = 1.0 / s.len() as f64;
                for i in s {
                    lambda[i] += w;
                }
            }
        }
        lambda
    }

    /// `c = Σ_{i: <ā_i, g> >= 0} λ̄_i ā_i`.
    pub fn rescale_direction(h: &HomogeneousLp, lambda_bar: &[f64], g: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; h.dim()];
        for (row, &l) in h.rows().iter().zip(lambda_bar) {
            if l != 0.0 && dot(row, g) >= 0.0 {
                for (cj, aj) in c.iter_mut().zip(row) {
                    *cj += l * aj;
                }
            }
        }
        c
    }

    /// The noiseless rescaling direction for a trajectory of `T` iterates.
    pub fn rescale_direction_along(h: &HomogeneousLp, trajectory: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
        let t = trajectory.len().max(1) as f64;
        let lambda_bar: Vec<f64> = lambda_along(h, trajectory).iter().map(|l| l / t).collect();
        rescale_direction(h, &lambda_bar, g)
    }
}
