//! Sensitivity formulas, Gaussian mechanism calibration, and a moments
//! accountant for end-to-end privacy loss.
//!
//! Two datasets are *neighboring* when they have the same size and differ
//! in exactly one tuple. An update function's `l2` sensitivity is the
//! largest distance between its outputs on any neighboring pair; the
//! Gaussian mechanism masks that distance with per-entry noise
//! `sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon`, which makes a
//! single release `(epsilon, delta)`-differentially private for
//! `epsilon <= 1` and `delta <= 0.01`.
//!
//! Releasing one update per iteration for `t` iterations leaks more than
//! any single release. The accountant tracks the log moment generating
//! function of the privacy loss, `alpha(tau) = tau (tau+1) epsilon^2 /
//! (4 ln(1.25/delta))` per iteration, sums it over iterations, and
//! converts the total to a guarantee via the tail bound
//! `eps_bar = min_tau [t * alpha(tau) + ln(1/delta)] / tau`, reported
//! together with the minimizing integer order.

use crate::rng;
use crate::ModelMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Largest moment order scanned by the accountant. The unconstrained
/// minimizer `tau ~ sqrt(4 ln(1/delta) ln(1.25/delta)) / (sqrt(t) eps)`
/// stays far below this for the supported budget range.
pub const TAU_MAX: u32 = 10_000;

/// Errors from calibration and accounting.
#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("epsilon must lie in (0, 1], got {0}")]
    EpsilonOutOfRange(f64),
    #[error("delta must lie in (0, 0.01], got {0}")]
    DeltaOutOfRange(f64),
    #[error("moment order tau must be at least 1")]
    TauOutOfRange,
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error(
        "total budget {target} is infeasible: the delta floor is {floor:.3e} and \
         epsilon = 1 already yields {at_one:.6}"
    )]
    InfeasibleTarget { target: f64, floor: f64, at_one: f64 },
    #[error("primal perturbation requires a strongly convex regularizer (lambda > 0)")]
    RegularizerNotStronglyConvex,
}

fn check_epsilon(eps: f64) -> Result<(), PrivacyError> {
    if eps.is_nan() || eps <= 0.0 || eps > 1.0 {
        return Err(PrivacyError::EpsilonOutOfRange(eps));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), PrivacyError> {
    if delta.is_nan() || delta <= 0.0 || delta > 0.01 {
        return Err(PrivacyError::DeltaOutOfRange(delta));
    }
    Ok(())
}

// The closed-form mechanism expressions are well defined for any
// delta < 1; budgets used by solver runs stay in the strict regime where
// the per-iteration guarantee is proved.
fn check_delta_formula(delta: f64) -> Result<(), PrivacyError> {
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(PrivacyError::DeltaOutOfRange(delta));
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<(), PrivacyError> {
    if value.is_nan() || value <= 0.0 {
        return Err(PrivacyError::NonPositive { name, value });
    }
    Ok(())
}

/// A per-iteration `(epsilon, delta)` budget.
///
/// The ranges `epsilon in (0, 1]` and `delta in (0, 0.01]` are where the
/// Gaussian-mechanism guarantee and its tail-bound argument hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, PrivacyError> {
        check_epsilon(epsilon)?;
        check_delta(delta)?;
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Result of the end-to-end accounting over `t` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountantReport {
    /// Total privacy loss `eps_bar`.
    pub epsilon_bar: f64,
    /// The integer moment order that attains the minimum.
    pub tau_star: u32,
    /// Number of composed iterations.
    pub t: usize,
}

/// Sensitivity of the linearized primal update: `2 c1 / (m_i (rho + 1/eta))`.
///
/// Shrinking the step size `eta` shrinks the sensitivity, which is what
/// lets a decreasing step-size schedule decrease the injected noise over
/// the course of a run.
pub fn sensitivity_dpadmm(c1: f64, m_i: usize, rho: f64, eta: f64) -> Result<f64, PrivacyError> {
    check_positive("c1", c1)?;
    check_positive("m_i", m_i as f64)?;
    check_positive("rho", rho)?;
    check_positive("eta", eta)?;
    Ok(2.0 * c1 / (m_i as f64 * (rho + 1.0 / eta)))
}

/// Sensitivity of the exact primal update under a 1-strongly-convex
/// regularizer: `2 c1 / ((lambda/n + rho) m_i)`.
pub fn sensitivity_pvp(
    c1: f64,
    m_i: usize,
    rho: f64,
    lambda: f64,
    n: usize,
) -> Result<f64, PrivacyError> {
    check_positive("c1", c1)?;
    check_positive("m_i", m_i as f64)?;
    check_positive("rho", rho)?;
    check_positive("n", n as f64)?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(PrivacyError::RegularizerNotStronglyConvex);
    }
    Ok(2.0 * c1 / ((lambda / n as f64 + rho) * m_i as f64))
}

/// Gaussian-mechanism noise scale for a given sensitivity:
/// `sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon`.
pub fn gaussian_sigma(sensitivity: f64, eps: f64, delta: f64) -> Result<f64, PrivacyError> {
    check_positive("sensitivity", sensitivity)?;
    check_epsilon(eps)?;
    check_delta_formula(delta)?;
    Ok(sensitivity * (2.0 * (1.25 / delta).ln()).sqrt() / eps)
}

/// Samples a `d x p` matrix of independent `N(0, sigma^2)` entries.
/// `sigma = 0` returns the zero matrix.
pub fn sample_noise(d: usize, p: usize, sigma: f64, rng: &mut impl Rng) -> ModelMatrix {
    assert!(sigma >= 0.0 && sigma.is_finite(), "noise scale must be finite and >= 0");
    if sigma == 0.0 {
        return ModelMatrix::zeros((d, p));
    }
    ModelMatrix::from_shape_fn((d, p), |_| sigma * rng.sample::<f64, _>(StandardNormal))
}

/// The `tau`-th log moment of one iteration's privacy loss:
/// `tau (tau+1) eps^2 / (4 ln(1.25/delta))`. Log moments compose linearly
/// across iterations, so `t` iterations accumulate `t` times this value.
pub fn log_moment(tau: u32, eps: f64, delta: f64) -> Result<f64, PrivacyError> {
    if tau < 1 {
        return Err(PrivacyError::TauOutOfRange);
    }
    check_epsilon(eps)?;
    check_delta_formula(delta)?;
    let tau = tau as f64;
    Ok(tau * (tau + 1.0) * eps * eps / (4.0 * (1.25 / delta).ln()))
}

/// Smallest total loss reachable as the per-iteration budget goes to
/// zero: `ln(1/delta) / TAU_MAX`. Targets at or below this floor are
/// unreachable for any `epsilon > 0`.
pub fn delta_floor(delta: f64) -> Result<f64, PrivacyError> {
    check_delta(delta)?;
    Ok((1.0 / delta).ln() / TAU_MAX as f64)
}

/// End-to-end privacy loss of `t` iterations, each `(eps, delta)`-private
/// via the Gaussian mechanism, with the same `delta`:
///
/// `eps_bar = min over tau in 1..=TAU_MAX of
///     [t * tau (tau+1) eps^2 / (4 ln(1.25/delta)) + ln(1/delta)] / tau`.
pub fn epsilon_bar(eps: f64, delta: f64, t: usize) -> Result<AccountantReport, PrivacyError> {
    check_epsilon(eps)?;
    check_delta(delta)?;
    if t < 1 {
        return Err(PrivacyError::NoIterations);
    }
    // Per-tau objective: t*A*(tau+1) + ln(1/delta)/tau with A = eps^2 / (4 ln(1.25/delta)).
    let a = t as f64 * eps * eps / (4.0 * (1.25 / delta).ln());
    let l1 = (1.0 / delta).ln();
    let mut best = f64::INFINITY;
    let mut tau_star = 1;
    for tau in 1..=TAU_MAX {
        let value = a * (tau as f64 + 1.0) + l1 / tau as f64;
        if value < best {
            best = value;
            tau_star = tau;
        }
    }
    Ok(AccountantReport { epsilon_bar: best, tau_star, t })
}

/// Inverts [`epsilon_bar`]: the per-iteration `epsilon` whose total loss
/// over `t` iterations equals `target` to within `1e-6`, found by
/// bisection (the total is strictly increasing in `epsilon`).
pub fn per_iteration_epsilon(target: f64, delta: f64, t: usize) -> Result<f64, PrivacyError> {
    check_delta(delta)?;
    if t < 1 {
        return Err(PrivacyError::NoIterations);
    }
    let floor = delta_floor(delta)?;
    let at_one = epsilon_bar(1.0, delta, t)?.epsilon_bar;
    if target.is_nan() || target <= floor || target > at_one {
        return Err(PrivacyError::InfeasibleTarget { target, floor, at_one });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut eps = 0.5;
    for _ in 0..80 {
        eps = 0.5 * (lo + hi);
        if epsilon_bar(eps, delta, t)?.epsilon_bar < target {
            lo = eps;
        } else {
            hi = eps;
        }
    }
    Ok(eps)
}

/// Per-iteration noise scale of the linearized private solver, composing
/// the update sensitivity with the Gaussian mechanism.
pub fn dpadmm_sigma(
    c1: f64,
    m_i: usize,
    rho: f64,
    eta: f64,
    budget: &PrivacyBudget,
) -> Result<f64, PrivacyError> {
    gaussian_sigma(
        sensitivity_dpadmm(c1, m_i, rho, eta)?,
        budget.epsilon(),
        budget.delta(),
    )
}

/// Convenience wrapper: an owned noise substream for agent `i` at
/// iteration `k` under a master seed.
pub fn noise_stream(master_seed: u64, k: usize, agent: usize) -> rand_chacha::ChaCha8Rng {
    rng::substream(master_seed, &[rng::tag::NOISE, k as u64, agent as u64])
}
