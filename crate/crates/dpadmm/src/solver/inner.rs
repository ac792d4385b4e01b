//! Inner solver for the exact per-agent subproblems.
//!
//! Minimizes `smooth(w) + l1_weight * ||w||_1` by proximal gradient
//! descent with a backtracking line search. With `l1_weight = 0` this is
//! plain gradient descent and the reported residual is the gradient
//! norm; otherwise the residual is the norm of the prox-gradient mapping
//! `(w - w_next) / step`, which vanishes exactly at minimizers.

use super::SolverError;
use crate::ModelMatrix;

/// Stopping parameters for the inner solver.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolverParams {
    /// Residual threshold.
    pub tolerance: f64,
    /// Iteration cap; the solver returns the achieved residual when it
    /// hits the cap.
    pub max_iters: usize,
}

impl Default for InnerSolverParams {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iters: 500 }
    }
}

/// A differentiable objective term.
pub trait SmoothObjective: Sync {
    fn value(&self, w: &ModelMatrix) -> f64;
    fn gradient(&self, w: &ModelMatrix) -> ModelMatrix;
}

/// Inner solver output: the iterate, the optimality residual at it, and
/// the number of iterations spent.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub w: ModelMatrix,
    pub residual: f64,
    pub iterations: usize,
}

fn frobenius(m: &ModelMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn soft_threshold(w: &ModelMatrix, threshold: f64) -> ModelMatrix {
    if threshold == 0.0 {
        return w.clone();
    }
    w.mapv(|x| {
        if x > threshold {
            x - threshold
        } else if x < -threshold {
            x + threshold
        } else {
            0.0
        }
    })
}

/// Minimizes `smooth(w) + l1_weight * ||w||_1` starting from `init`.
///
/// Returns an error only if the line search cannot find any decrease,
/// which indicates a non-convex or inconsistent objective.
pub fn minimize_composite(
    smooth: &impl SmoothObjective,
    l1_weight: f64,
    init: &ModelMatrix,
    params: &InnerSolverParams,
) -> Result<InnerSolution, SolverError> {
    debug_assert!(l1_weight >= 0.0);
    let mut w = init.clone();
    let mut value = smooth.value(&w);
    let mut step = 1.0_f64;
    let mut residual = f64::INFINITY;

    for iteration in 0..params.max_iters {
        let grad = smooth.gradient(&w);
        if l1_weight == 0.0 {
            residual = frobenius(&grad);
            if residual <= params.tolerance {
                return Ok(InnerSolution { w, residual, iterations: iteration });
            }
        }

        let (next, next_value) = loop {
            let mut trial = w.clone();
            trial.scaled_add(-step, &grad);
            let trial = soft_threshold(&trial, step * l1_weight);
            let diff = &trial - &w;
            let trial_value = smooth.value(&trial);
            // Sufficient decrease of the smooth part against its local
            // quadratic model at the current step size.
            let model = value + grad.iter().zip(diff.iter()).map(|(g, d)| g * d).sum::<f64>()
                + diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if trial_value <= model + 1e-12 * (1.0 + value.abs()) {
                break (trial, trial_value);
            }
            step *= 0.5;
            if step < 1e-18 {
                return Err(SolverError::Diverged(format!(
                    "line search exhausted at inner iteration {iteration} (value {value:.6e})"
                )));
            }
        };

        residual = frobenius(&(&w - &next)) / step;
        w = next;
        value = next_value;
        if l1_weight > 0.0 && residual <= params.tolerance {
            return Ok(InnerSolution { w, residual, iterations: iteration + 1 });
        }
        // Let the step recover slowly; aggressive regrowth makes the
        // line search oscillate on ill-conditioned coordinates.
        step = (step * 1.1).min(1e4);
    }

    if l1_weight == 0.0 {
        residual = frobenius(&smooth.gradient(&w));
    }
    Ok(InnerSolution { w, residual, iterations: params.max_iters })
}
