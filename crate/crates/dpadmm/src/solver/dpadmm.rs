//! The linearized private consensus solver.
//!
//! Instead of minimizing the local augmented Lagrangian exactly, each
//! agent minimizes its first-order surrogate around the previous shared
//! iterate `s` (the objective replaced by its linearization at `s`) plus
//! a proximal term `||w - s||^2 / (2 eta_k)`. The surrogate is a strictly
//! convex quadratic, so the update is closed-form:
//!
//! `w = (-f'(s) + dual + rho * consensus + s / eta_k) / (rho + 1 / eta_k)`
//!
//! with `f'(s)` the mean loss gradient plus the scaled regularizer
//! subgradient. The update touches the data only through the mean
//! gradient, which both makes an iteration cheap and caps the update's
//! sensitivity at `2 c1 / (m_i (rho + 1/eta_k))`, independent of any
//! smoothness or strong-convexity assumption.

use super::{
    AgentStepResult, EvalSpec, HyperParams, LoopSetup, NoiseMode, RunTrace, Schedule, SolverError,
    StepSizeParams,
};
use crate::data::AgentShard;
use crate::loss::{self, LossSpec, RegSpec};
use crate::privacy::{self, PrivacyBudget};
use crate::ModelMatrix;

/// Closed-form minimizer of the linearized augmented Lagrangian.
///
/// `shared_prev` is the previous shared iterate the linearization is
/// taken at, `consensus` the previous global iterate, `dual` the agent's
/// dual variable.
#[allow(clippy::too_many_arguments)]
pub fn linearized_primal_update(
    shard: &AgentShard,
    loss: &LossSpec,
    reg: &RegSpec,
    shared_prev: &ModelMatrix,
    consensus: &ModelMatrix,
    dual: &ModelMatrix,
    rho: f64,
    eta: f64,
) -> Result<ModelMatrix, SolverError> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(SolverError::Argument(format!("step size must be positive, got {eta}")));
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(SolverError::Argument(format!("rho must be positive, got {rho}")));
    }
    let mut numerator = loss::shard_objective_subgrad(shard, loss, reg, shared_prev)?;
    numerator.mapv_inplace(|x| -x);
    numerator += dual;
    numerator.scaled_add(rho, consensus);
    numerator.scaled_add(1.0 / eta, shared_prev);
    Ok(numerator / (rho + 1.0 / eta))
}

/// Gradient of the linearized augmented Lagrangian at `w`; zero exactly
/// at [`linearized_primal_update`]'s output. Exposed for verification.
#[allow(clippy::too_many_arguments)]
pub fn linearized_lagrangian_grad(
    shard: &AgentShard,
    loss: &LossSpec,
    reg: &RegSpec,
    w: &ModelMatrix,
    shared_prev: &ModelMatrix,
    consensus: &ModelMatrix,
    dual: &ModelMatrix,
    rho: f64,
    eta: f64,
) -> Result<ModelMatrix, SolverError> {
    let mut g = loss::shard_objective_subgrad(shard, loss, reg, shared_prev)?;
    g -= dual;
    g.scaled_add(rho, &(w - consensus));
    g.scaled_add(1.0 / eta, &(w - shared_prev));
    Ok(g)
}

/// Runs the linearized private solver for `hp.t` iterations.
///
/// Per iteration and agent: compute the schedule's step size, take the
/// closed-form primal step, perturb it with Gaussian noise calibrated to
/// the step's sensitivity at the budget in `hp`, aggregate, and ascend
/// the duals. Running averages use the indexing that matches the
/// schedule's analysis.
#[allow(clippy::too_many_arguments)]
pub fn run_dpadmm(
    shards: &[AgentShard],
    loss: &LossSpec,
    reg: &RegSpec,
    hp: &HyperParams,
    schedule: Schedule,
    noise: NoiseMode,
    eval: EvalSpec<'_>,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    hp.validate()?;
    let budget: PrivacyBudget = *hp.budget_for("the linearized private solver")?;
    let d = shards.first().map_or(0, AgentShard::dim);
    let params = StepSizeParams::from_specs(loss, reg, hp, d, 1)?;
    let rho = hp.rho;

    let setup = LoopSetup {
        algorithm: "dpadmm",
        shards,
        loss,
        reg,
        rho,
        t: hp.t,
        window: schedule.window(),
        eval,
    };
    super::run_consensus_loop(setup, |k, i, state, consensus| {
        let shard = &shards[i];
        let eta = schedule.step_size(k, shard.len(), &params)?;
        let local = linearized_primal_update(
            shard,
            loss,
            reg,
            &state.shared,
            consensus,
            &state.dual,
            rho,
            eta,
        )?;
        let shared = match noise {
            NoiseMode::Disabled => local.clone(),
            NoiseMode::Calibrated => {
                let sigma = privacy::dpadmm_sigma(loss.c1, shard.len(), rho, eta, &budget)?;
                let mut rng = privacy::noise_stream(seed, k, i);
                &local + &privacy::sample_noise(local.nrows(), local.ncols(), sigma, &mut rng)
            }
        };
        Ok(AgentStepResult { local, shared, working_dual: None, inner_iterations: 0 })
    })
}
