//! Time-varying step-size schedules for the linearized private solver.
//!
//! The step size plays two roles at once: it weights the proximal term
//! that keeps an update close to the previous iterate, and through the
//! update's sensitivity it scales the injected noise. Both schedules
//! shrink as `1/sqrt(k)` in the iteration counter, so iterates stabilize
//! and the noise scale decreases over the run.

use super::{HyperParams, Schedule, SolverError};
use crate::loss::{LossSpec, RegSpec};

/// Constants a schedule needs besides the iteration counter and shard
/// size: the model-norm bound `c_w`, the regularizer weight and agent
/// count, model shape, per-iteration budget, and the curvature bounds of
/// the loss/regularizer pair.
#[derive(Debug, Clone, Copy)]
pub struct StepSizeParams {
    pub c_w: f64,
    pub lambda: f64,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: f64,
    pub c4: Option<f64>,
}

impl StepSizeParams {
    /// Collects the constants from the run's specs. Requires a budget:
    /// the schedules depend on `(eps, delta)` even in noise-free runs.
    pub fn from_specs(
        loss: &LossSpec,
        reg: &RegSpec,
        hp: &HyperParams,
        d: usize,
        p: usize,
    ) -> Result<Self, SolverError> {
        let budget = hp.budget.as_ref().ok_or(SolverError::MissingBudget("the step-size schedule"))?;
        if hp.c_w.is_nan() || hp.c_w <= 0.0 {
            return Err(SolverError::Argument(format!(
                "c_w must be positive for scheduled runs, got {}",
                hp.c_w
            )));
        }
        Ok(Self {
            c_w: hp.c_w,
            lambda: reg.lambda,
            n: reg.n,
            d,
            p,
            eps: budget.epsilon(),
            delta: budget.delta(),
            c1: loss.c1,
            c2: reg.c2,
            c3: loss.c3,
            c4: reg.c4,
        })
    }

    fn noise_energy(&self, m_i: usize) -> f64 {
        let dp = (self.d * self.p) as f64;
        let m = m_i as f64;
        8.0 * dp * self.c1 * self.c1 * (1.25 / self.delta).ln() / (m * m * self.eps * self.eps)
    }
}

/// Schedule for convex, possibly non-smooth objectives:
///
/// `eta_k = c_w / sqrt(2k) * [(c1 + lambda c2 / n)^2
///          + 8 d p c1^2 ln(1.25/delta) / (m_i^2 eps^2)]^{-1/2}`.
pub fn step_size_nonsmooth(k: usize, m_i: usize, params: &StepSizeParams) -> Result<f64, SolverError> {
    if k == 0 {
        return Err(SolverError::Argument("step sizes are defined for k >= 1".into()));
    }
    let c2 = params.c2.ok_or(SolverError::MissingBound("non-smooth", "c2"))?;
    let subgrad = params.c1 + params.lambda * c2 / params.n as f64;
    let bracket = subgrad * subgrad + params.noise_energy(m_i);
    Ok(params.c_w / (2.0 * k as f64).sqrt() / bracket.sqrt())
}

/// Schedule for convex smooth objectives:
///
/// `eta_k = [c3 + lambda c4 / n
///          + 4 c1 sqrt(d p k ln(1.25/delta)) / (m_i eps c_w)]^{-1}`.
pub fn step_size_smooth(k: usize, m_i: usize, params: &StepSizeParams) -> Result<f64, SolverError> {
    if k == 0 {
        return Err(SolverError::Argument("step sizes are defined for k >= 1".into()));
    }
    let c4 = params.c4.ok_or(SolverError::MissingBound("smooth", "c4"))?;
    let dpk = (params.d * params.p * k) as f64;
    let noise = 4.0 * params.c1 * (dpk * (1.25 / params.delta).ln()).sqrt()
        / (m_i as f64 * params.eps * params.c_w);
    Ok(1.0 / (params.c3 + params.lambda * c4 / params.n as f64 + noise))
}

impl Schedule {
    /// Step size for iteration `k` on a shard of `m_i` samples.
    pub fn step_size(
        self,
        k: usize,
        m_i: usize,
        params: &StepSizeParams,
    ) -> Result<f64, SolverError> {
        match self {
            Schedule::Nonsmooth => step_size_nonsmooth(k, m_i, params),
            Schedule::Smooth => step_size_smooth(k, m_i, params),
        }
    }
}
