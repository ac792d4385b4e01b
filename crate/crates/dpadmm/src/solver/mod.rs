//! The five training algorithms as iteration-step state machines over
//! agents plus an aggregator.
//!
//! Every consensus variant runs the same outer loop: each agent updates a
//! local primal iterate from its shard, shares a (possibly perturbed)
//! copy with the aggregator, the aggregator forms the new global iterate
//! from the shared copies and the duals, and each agent then ascends its
//! dual. The variants differ only in the agent step:
//!
//! - [`run_admm`]: exact minimization of the local augmented Lagrangian,
//!   no perturbation.
//! - [`run_pvp`]: exact minimization, Gaussian noise of constant scale on
//!   the shared primal.
//! - [`run_dvp`]: Gaussian noise on the dual before an exact
//!   minimization; the primal is shared unperturbed.
//! - [`run_dpadmm`]: a closed-form minimizer of the linearized augmented
//!   Lagrangian with a decreasing step size, plus Gaussian noise whose
//!   scale shrinks with the step size.
//!
//! [`run_dpsgd`] is the gradient-descent baseline: agents exchange
//! noisy clipped gradients instead of models.
//!
//! Within one iteration the agent updates run in parallel; per-agent,
//! per-iteration noise substreams keep results independent of thread
//! scheduling. After every aggregation + dual ascent the duals sum to
//! zero; the loop tracks the worst violation so callers can assert it.

mod dpadmm;
mod dpsgd;
mod exact;
mod inner;
mod schedule;

pub use dpadmm::{linearized_lagrangian_grad, linearized_primal_update, run_dpadmm};
pub use dpsgd::run_dpsgd;
pub use exact::{exact_primal_update, run_admm, run_dvp, run_pvp};
pub use inner::{minimize_composite, InnerSolution, InnerSolverParams, SmoothObjective};
pub use schedule::{step_size_nonsmooth, step_size_smooth, StepSizeParams};

use crate::data::{AgentShard, Dataset};
use crate::loss::{LossError, LossSpec, RegSpec};
use crate::metrics::{self, MetricsError};
use crate::privacy::{PrivacyBudget, PrivacyError};
use crate::ModelMatrix;
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

/// Errors from solver runs.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{0}")]
    Argument(String),
    #[error("a privacy budget is required for {0}")]
    MissingBudget(&'static str),
    #[error("the {0} schedule needs bound {1}, undefined for this loss/regularizer pair")]
    MissingBound(&'static str, &'static str),
    #[error("inner solver diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Which step-size schedule (and running-average indexing) a private run
/// uses. `Nonsmooth` only assumes convexity; `Smooth` additionally uses
/// the curvature bounds `c3`, `c4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Nonsmooth,
    Smooth,
}

/// Whether perturbation noise is actually sampled. `Disabled` keeps the
/// schedule and calibration math but injects zeros, which makes runs
/// deterministic; useful for convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Calibrated,
    Disabled,
}

/// Run-level hyperparameters shared by all solvers.
#[derive(Debug, Clone, Copy)]
pub struct HyperParams {
    /// Penalty parameter of the augmented Lagrangian.
    pub rho: f64,
    /// Number of outer iterations.
    pub t: usize,
    /// Bound on the optimal model norm, consumed by the step-size
    /// schedules.
    pub c_w: f64,
    /// Per-iteration privacy budget; `None` for non-private runs.
    pub budget: Option<PrivacyBudget>,
}

impl HyperParams {
    fn validate(&self) -> Result<(), SolverError> {
        if self.rho.is_nan() || self.rho <= 0.0 {
            return Err(SolverError::Argument(format!("rho must be positive, got {}", self.rho)));
        }
        if self.t < 1 {
            return Err(SolverError::Argument("iteration count must be at least 1".into()));
        }
        Ok(())
    }

    fn budget_for(&self, algorithm: &'static str) -> Result<&PrivacyBudget, SolverError> {
        self.budget.as_ref().ok_or(SolverError::MissingBudget(algorithm))
    }
}

/// One agent's iterate bundle.
#[derive(Debug, Clone)]
pub struct AgentState {
    /// Local primal iterate.
    pub local: ModelMatrix,
    /// The copy shared with the aggregator (perturbed where the
    /// algorithm says so).
    pub shared: ModelMatrix,
    /// Dual variable.
    pub dual: ModelMatrix,
}

impl AgentState {
    fn zeros(d: usize, p: usize) -> Self {
        Self {
            local: ModelMatrix::zeros((d, p)),
            shared: ModelMatrix::zeros((d, p)),
            dual: ModelMatrix::zeros((d, p)),
        }
    }
}

/// Aggregator step: mean of the shared primals minus mean of the duals
/// over `rho`.
pub fn aggregate(states: &[AgentState], rho: f64) -> Result<ModelMatrix, SolverError> {
    if states.is_empty() {
        return Err(SolverError::Argument("aggregate needs at least one agent".into()));
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(SolverError::Argument(format!("rho must be positive, got {rho}")));
    }
    let mut sum = states[0].shared.clone();
    sum.scaled_add(-1.0 / rho, &states[0].dual);
    for s in &states[1..] {
        sum += &s.shared;
        sum.scaled_add(-1.0 / rho, &s.dual);
    }
    Ok(sum / states.len() as f64)
}

/// Dual ascent step: `dual - rho * (shared - consensus)`.
pub fn dual_update(
    dual: &ModelMatrix,
    shared: &ModelMatrix,
    consensus: &ModelMatrix,
    rho: f64,
) -> ModelMatrix {
    let mut out = dual.clone();
    out.scaled_add(-rho, &(shared - consensus));
    out
}

/// Per-iteration metric record. `augmented_objective` is evaluated on
/// running averages, `augmented_objective_last` on the current iterates;
/// `empirical_loss` uses the current shared models, `test_error` the
/// current global model. `elapsed_s` is cumulative solver time,
/// excluding metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub augmented_objective: f64,
    pub augmented_objective_last: f64,
    pub empirical_loss: f64,
    pub test_error: f64,
    pub elapsed_s: f64,
}

/// The output of one solver run: per-iteration records plus the final
/// models and diagnostics.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: &'static str,
    pub records: Vec<IterationRecord>,
    /// Final global iterate.
    pub final_global: ModelMatrix,
    /// Running average of the global iterate.
    pub final_global_avg: ModelMatrix,
    /// Per-agent running averages of the shared primals.
    pub final_agent_avgs: Vec<ModelMatrix>,
    /// Worst `||sum_i dual_i||` observed after any iteration.
    pub max_dual_sum_norm: f64,
    /// Total inner-solver iterations across all agents and iterations
    /// (zero for closed-form and gradient solvers).
    pub inner_iterations: u64,
}

impl RunTrace {
    /// Cumulative solver wall-clock of the full run, in seconds.
    pub fn solver_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_s)
    }

    /// The last record; runs always have `t >= 1` iterations.
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("a run has at least one iteration")
    }
}

/// Held-out data for per-iteration evaluation. Without a test set the
/// `test_error` column is `NaN`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalSpec<'a> {
    pub test: Option<&'a Dataset>,
}

/// Which iterates enter the running averages: the windows differ between
/// the two schedules' analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AveragingWindow {
    /// Average shared iterates `0..k-1` (includes the zero start, lags
    /// the newest iterate).
    IncludeInitial,
    /// Average shared iterates `1..k`.
    FromFirst,
}

impl Schedule {
    fn window(self) -> AveragingWindow {
        match self {
            Schedule::Nonsmooth => AveragingWindow::IncludeInitial,
            Schedule::Smooth => AveragingWindow::FromFirst,
        }
    }
}

fn frobenius(m: &ModelMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks shard shapes and labels; returns `(d, [m_i])`.
fn validate_shards(shards: &[AgentShard]) -> Result<(usize, Vec<usize>), SolverError> {
    let first = shards
        .first()
        .ok_or_else(|| SolverError::Argument("at least one shard is required".into()))?;
    let d = first.dim();
    let mut sizes = Vec::with_capacity(shards.len());
    for (i, shard) in shards.iter().enumerate() {
        if shard.is_empty() {
            return Err(SolverError::Argument(format!("shard {i} is empty")));
        }
        if shard.dim() != d {
            return Err(SolverError::Argument(format!(
                "shard {i} has dimension {}, expected {d}",
                shard.dim()
            )));
        }
        if shard.labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(SolverError::Argument(format!("shard {i} has labels outside {{+1,-1}}")));
        }
        sizes.push(shard.len());
    }
    Ok((d, sizes))
}

fn check_reg_agents(reg: &RegSpec, n: usize) -> Result<(), SolverError> {
    if reg.n != n {
        return Err(SolverError::Argument(format!(
            "regularizer is scaled for {} agents but {n} shards were supplied",
            reg.n
        )));
    }
    Ok(())
}

/// What an agent step hands back to the loop.
struct AgentStepResult {
    local: ModelMatrix,
    shared: ModelMatrix,
    /// A replacement dual to use from the aggregation onward (dual
    /// perturbation); `None` keeps the current dual.
    working_dual: Option<ModelMatrix>,
    inner_iterations: u64,
}

struct LoopSetup<'a> {
    algorithm: &'static str,
    shards: &'a [AgentShard],
    loss: &'a LossSpec,
    reg: &'a RegSpec,
    rho: f64,
    t: usize,
    window: AveragingWindow,
    eval: EvalSpec<'a>,
}

/// The shared consensus loop. `step(k, i, state, consensus)` computes
/// agent `i`'s update for iteration `k` from its previous state and the
/// previous global iterate.
fn run_consensus_loop<F>(setup: LoopSetup<'_>, step: F) -> Result<RunTrace, SolverError>
where
    F: Fn(usize, usize, &AgentState, &ModelMatrix) -> Result<AgentStepResult, SolverError> + Sync,
{
    let (d, _) = validate_shards(setup.shards)?;
    check_reg_agents(setup.reg, setup.shards.len())?;
    let p = 1;
    let n = setup.shards.len();

    let mut states: Vec<AgentState> = (0..n).map(|_| AgentState::zeros(d, p)).collect();
    let mut consensus = ModelMatrix::zeros((d, p));
    let mut shared_sums: Vec<ModelMatrix> = (0..n).map(|_| ModelMatrix::zeros((d, p))).collect();
    let mut consensus_sum = ModelMatrix::zeros((d, p));

    let mut records = Vec::with_capacity(setup.t);
    let mut max_dual_sum = 0.0_f64;
    let mut inner_iterations = 0_u64;
    let mut elapsed = 0.0_f64;

    for k in 1..=setup.t {
        let tick = Instant::now();

        if setup.window == AveragingWindow::IncludeInitial {
            for (sum, state) in shared_sums.iter_mut().zip(states.iter()) {
                *sum += &state.shared;
            }
        }

        let results: Vec<AgentStepResult> = states
            .par_iter()
            .enumerate()
            .map(|(i, state)| step(k, i, state, &consensus))
            .collect::<Result<_, _>>()?;
        for (state, result) in states.iter_mut().zip(results) {
            state.local = result.local;
            state.shared = result.shared;
            if let Some(dual) = result.working_dual {
                state.dual = dual;
            }
            inner_iterations += result.inner_iterations;
        }

        consensus = aggregate(&states, setup.rho)?;
        for state in states.iter_mut() {
            state.dual = dual_update(&state.dual, &state.shared, &consensus, setup.rho);
        }

        if setup.window == AveragingWindow::FromFirst {
            for (sum, state) in shared_sums.iter_mut().zip(states.iter()) {
                *sum += &state.shared;
            }
        }
        consensus_sum += &consensus;

        let mut dual_sum = ModelMatrix::zeros((d, p));
        for state in &states {
            dual_sum += &state.dual;
        }
        max_dual_sum = max_dual_sum.max(frobenius(&dual_sum));
        debug_assert!(
            frobenius(&dual_sum) <= 1e-8 * (1.0 + setup.rho) * n as f64,
            "duals should telescope to zero"
        );

        elapsed += tick.elapsed().as_secs_f64();

        // Metric evaluation is reporting, not solving; it stays outside
        // the timed region.
        let scale = 1.0 / k as f64;
        let agent_avgs: Vec<ModelMatrix> =
            shared_sums.iter().map(|s| s.mapv(|x| x * scale)).collect();
        let consensus_avg = consensus_sum.mapv(|x| x * scale);
        let shared_now: Vec<ModelMatrix> = states.iter().map(|s| s.shared.clone()).collect();
        records.push(IterationRecord {
            k,
            augmented_objective: metrics::augmented_objective(
                setup.shards,
                setup.loss,
                setup.reg,
                &agent_avgs,
                &consensus_avg,
                setup.rho,
            )?,
            augmented_objective_last: metrics::augmented_objective(
                setup.shards,
                setup.loss,
                setup.reg,
                &shared_now,
                &consensus,
                setup.rho,
            )?,
            empirical_loss: metrics::empirical_loss(setup.shards, setup.loss, &shared_now)?,
            test_error: match setup.eval.test {
                Some(test) => metrics::classification_error(&consensus, test)?,
                None => f64::NAN,
            },
            elapsed_s: elapsed,
        });
    }

    let scale = 1.0 / setup.t as f64;
    Ok(RunTrace {
        algorithm: setup.algorithm,
        records,
        final_global: consensus,
        final_global_avg: consensus_sum.mapv(|x| x * scale),
        final_agent_avgs: shared_sums.iter().map(|s| s.mapv(|x| x * scale)).collect(),
        max_dual_sum_norm: max_dual_sum,
        inner_iterations,
    })
}

/// Record equality up to wall clock (which is measurement, not
/// computation) with NaN-tolerant test-error comparison.
#[cfg(test)]
pub(crate) fn records_match(a: &[IterationRecord], b: &[IterationRecord]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(x, y)| {
            x.k == y.k
                && x.augmented_objective == y.augmented_objective
                && x.augmented_objective_last == y.augmented_objective_last
                && x.empirical_loss == y.empirical_loss
                && (x.test_error == y.test_error
                    || (x.test_error.is_nan() && y.test_error.is_nan()))
        })
}
