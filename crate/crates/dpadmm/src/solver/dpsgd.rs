//! Distributed differentially private gradient descent.
//!
//! Per iteration, each agent clips every per-sample loss gradient to norm
//! `clip`, averages them over its shard, and perturbs the average with
//! Gaussian noise calibrated to the replace-one-tuple sensitivity
//! `2 clip / m_i`. The aggregator averages the noisy gradients across
//! agents, adds the scaled regularizer gradient of the current global
//! model, and takes a step:
//!
//! `w <- w - lr * ( (1/n) sum_i g_i + (lambda/n) R'(w) )`.
//!
//! No duals or per-agent models exist here; the trace reports every
//! model-based metric at the shared global iterate.

use super::{EvalSpec, HyperParams, IterationRecord, NoiseMode, RunTrace, SolverError};
use crate::data::AgentShard;
use crate::loss::{self, LossKind, LossSpec, RegSpec};
use crate::metrics;
use crate::privacy;
use crate::ModelMatrix;
use ndarray::Array1;
use rayon::prelude::*;
use std::time::Instant;

/// Mean of per-sample gradients, each clipped to norm `clip`.
fn clipped_mean_gradient(
    shard: &AgentShard,
    w: &ModelMatrix,
    row_norms: &Array1<f64>,
    clip: f64,
) -> ModelMatrix {
    let m = shard.len() as f64;
    let scores = shard.features.dot(&w.column(0));
    // Per-sample gradient is coeff_j * a_j with |coeff_j| < 1, so its
    // norm is |coeff_j| * ||a_j||.
    let coeffs = Array1::from_iter(scores.iter().zip(shard.labels.iter()).enumerate().map(
        |(j, (&z, &b))| {
            let coeff = -b * loss::sigmoid(-b * z);
            let norm = coeff.abs() * row_norms[j];
            let scale = if norm > clip { clip / norm } else { 1.0 };
            coeff * scale / m
        },
    ));
    let g = shard.features.t().dot(&coeffs);
    let mut out = ModelMatrix::zeros((w.nrows(), 1));
    out.column_mut(0).assign(&g);
    out
}

/// Runs distributed DP-SGD for `hp.t` iterations with learning rate `lr`
/// and per-sample clip norm `clip`.
#[allow(clippy::too_many_arguments)]
pub fn run_dpsgd(
    shards: &[AgentShard],
    loss: &LossSpec,
    reg: &RegSpec,
    hp: &HyperParams,
    lr: f64,
    clip: f64,
    noise: NoiseMode,
    eval: EvalSpec<'_>,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    hp.validate()?;
    if loss.kind != LossKind::BinaryLogistic {
        return Err(SolverError::Argument(
            "gradient descent here supports the binary logistic loss".into(),
        ));
    }
    if lr.is_nan() || lr < 0.0 || clip.is_nan() || clip <= 0.0 {
        return Err(SolverError::Argument(format!(
            "learning rate must be >= 0 and clip norm > 0, got lr {lr}, clip {clip}"
        )));
    }
    let (d, sizes) = super::validate_shards(shards)?;
    super::check_reg_agents(reg, shards.len())?;
    let budget = hp.budget_for("distributed DP-SGD")?;
    let sigmas: Vec<f64> = sizes
        .iter()
        .map(|&m_i| {
            privacy::gaussian_sigma(2.0 * clip / m_i as f64, budget.epsilon(), budget.delta())
                .map_err(SolverError::from)
        })
        .collect::<Result<_, _>>()?;
    let row_norms: Vec<Array1<f64>> = shards
        .iter()
        .map(|s| Array1::from_iter(s.features.rows().into_iter().map(|r| r.dot(&r).sqrt())))
        .collect();

    let n = shards.len() as f64;
    let weight = reg.weight();
    let mut w = ModelMatrix::zeros((d, 1));
    let mut w_sum = ModelMatrix::zeros((d, 1));
    let mut records = Vec::with_capacity(hp.t);
    let mut elapsed = 0.0_f64;

    for k in 1..=hp.t {
        let tick = Instant::now();
        let noisy: Vec<ModelMatrix> = shards
            .par_iter()
            .enumerate()
            .map(|(i, shard)| {
                let mut g = clipped_mean_gradient(shard, &w, &row_norms[i], clip);
                if noise == NoiseMode::Calibrated {
                    let mut rng = privacy::noise_stream(seed, k, i);
                    g += &privacy::sample_noise(d, 1, sigmas[i], &mut rng);
                }
                g
            })
            .collect();
        let mut direction = ModelMatrix::zeros((d, 1));
        for g in &noisy {
            direction += g;
        }
        direction /= n;
        direction.scaled_add(weight, &loss::reg_subgrad(reg, &w));
        w.scaled_add(-lr, &direction);
        w_sum += &w;
        elapsed += tick.elapsed().as_secs_f64();

        let avg = w_sum.mapv(|x| x / k as f64);
        let models_now: Vec<ModelMatrix> = vec![w.clone(); shards.len()];
        let avgs: Vec<ModelMatrix> = vec![avg.clone(); shards.len()];
        records.push(IterationRecord {
            k,
            augmented_objective: metrics::augmented_objective(shards, loss, reg, &avgs, &avg, hp.rho)?,
            augmented_objective_last: metrics::augmented_objective(
                shards, loss, reg, &models_now, &w, hp.rho,
            )?,
            empirical_loss: metrics::empirical_loss(shards, loss, &models_now)?,
            test_error: match eval.test {
                Some(test) => metrics::classification_error(&w, test)?,
                None => f64::NAN,
            },
            elapsed_s: elapsed,
        });
    }

    let avg = w_sum.mapv(|x| x / hp.t as f64);
    Ok(RunTrace {
        algorithm: "dpsgd",
        records,
        final_global_avg: avg.clone(),
        final_agent_avgs: vec![avg; shards.len()],
        final_global: w,
        max_dual_sum_norm: 0.0,
        inner_iterations: 0,
    })
}
