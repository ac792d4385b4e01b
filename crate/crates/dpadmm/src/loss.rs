//! Loss and regularizer primitives for regularized empirical risk
//! minimization, together with the curvature bounds consumed by noise
//! calibration and step-size schedules.
//!
//! All exponentials go through `softplus`/`log-sum-exp` style rewrites so
//! losses and gradients stay finite for any score magnitude. Per-sample
//! functions panic on structural misuse (wrong shapes, labels outside
//! `{+1, -1}`, a label vector that is not one-hot); shard-level functions
//! return errors for the conditions a caller can reasonably hit at run
//! time.
//!
//! Shard-level operations evaluate the binary logistic objective
//! `f_i(w) = (1/m_i) * sum_j loss(a_j, b_j, w) + (lambda/n) * R(w)` in
//! vectorized form; multi-class logistic is available per sample (the
//! experiment pipeline produces binary shards only).

use crate::data::AgentShard;
use crate::ModelMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

/// Errors from shard-level loss evaluation.
#[derive(Debug, Error)]
pub enum LossError {
    #[error("shard has no samples")]
    EmptyShard,
    #[error("shard-level objectives support the binary logistic loss only")]
    MulticlassShard,
}

/// Supported loss families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    BinaryLogistic,
    MulticlassLogistic,
}

/// Supported regularizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    L1,
    L2,
}

/// A loss family plus its curvature bounds.
///
/// `c1` bounds the (sub)gradient norm `||loss'(.)||` for feature vectors
/// with `||a|| <= 1`; `c3` bounds the Hessian norm of the (smooth)
/// loss.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec {
    pub kind: LossKind,
    pub c1: f64,
    pub c3: f64,
}

impl LossSpec {
    /// Binary logistic loss with the exact bounds for unit-norm rows:
    /// the gradient factor lies in `(0, 1)` so `c1 = 1`, and
    /// `||hessian|| <= ||a||^2 / 4` gives `c3 = 0.25`.
    pub fn binary_logistic() -> Self {
        Self { kind: LossKind::BinaryLogistic, c1: 1.0, c3: 0.25 }
    }

    /// Multi-class logistic loss. The gradient is `(softmax - b) a^T`
    /// with `||softmax - b|| <= sqrt(2)`, and the softmax Jacobian is
    /// bounded by `1/2`, so `c1 = sqrt(2)` and `c3 = 0.5` for unit rows.
    pub fn multiclass_logistic() -> Self {
        Self { kind: LossKind::MulticlassLogistic, c1: std::f64::consts::SQRT_2, c3: 0.5 }
    }
}

/// A regularizer, its weight, the agent count that scales it, and its
/// bound constants.
///
/// Each agent's local objective carries `(lambda / n) * R(w)`; keeping
/// `lambda` and `n` here makes shard objectives self-contained. `c2`
/// bounds `||R'(.)||` (defined for `l1`, where it depends on the model
/// shape), `c4` bounds `||hessian R||` (defined for `l2`).
#[derive(Debug, Clone, Copy)]
pub struct RegSpec {
    pub kind: RegKind,
    pub lambda: f64,
    pub n: usize,
    pub c2: Option<f64>,
    pub c4: Option<f64>,
}

impl RegSpec {
    /// `R(w) = ||w||_1` for a `d x p` model: `||sgn(w)|| <= sqrt(d p)`.
    pub fn l1(lambda: f64, n: usize, d: usize, p: usize) -> Self {
        Self { kind: RegKind::L1, lambda, n, c2: Some(((d * p) as f64).sqrt()), c4: None }
    }

    /// `R(w) = ||w||^2 / 2`: the Hessian is the identity, `c4 = 1`.
    pub fn l2(lambda: f64, n: usize) -> Self {
        Self { kind: RegKind::L2, lambda, n, c2: None, c4: Some(1.0) }
    }

    /// The per-agent regularizer weight `lambda / n`.
    pub fn weight(&self) -> f64 {
        self.lambda / self.n as f64
    }
}

/// The standard `(c1, c2, c3, c4)` constants for a loss/regularizer pair
/// on `d x p` models with unit-norm feature rows. `c2` is `None` for
/// `l2` (its gradient norm is unbounded) and `c4` is `None` for `l1`
/// (no Hessian).
pub fn standard_bounds(
    loss: LossKind,
    reg: RegKind,
    d: usize,
    p: usize,
) -> (f64, Option<f64>, f64, Option<f64>) {
    let spec = match loss {
        LossKind::BinaryLogistic => LossSpec::binary_logistic(),
        LossKind::MulticlassLogistic => LossSpec::multiclass_logistic(),
    };
    let (c2, c4) = match reg {
        RegKind::L1 => (Some(((d * p) as f64).sqrt()), None),
        RegKind::L2 => (None, Some(1.0)),
    };
    (spec.c1, c2, spec.c3, c4)
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn assert_binary_shapes(a: ArrayView1<f64>, b: f64, w: &ModelMatrix) {
    assert_eq!(w.ncols(), 1, "binary logistic expects a d x 1 model, got d x {}", w.ncols());
    assert_eq!(a.len(), w.nrows(), "feature length {} != model rows {}", a.len(), w.nrows());
    assert!(b == 1.0 || b == -1.0, "binary label must be +1 or -1, got {b}");
}

/// Binary logistic loss `ln(1 + exp(-b * w^T a))`.
pub fn binary_logistic_loss(a: ArrayView1<f64>, b: f64, w: &ModelMatrix) -> f64 {
    assert_binary_shapes(a, b, w);
    softplus(-b * w.column(0).dot(&a))
}

/// Gradient of the binary logistic loss with respect to `w`:
/// `-b a / (1 + exp(b w^T a))`, a `d x 1` matrix with norm at most
/// `||a||`.
pub fn binary_logistic_grad(a: ArrayView1<f64>, b: f64, w: &ModelMatrix) -> ModelMatrix {
    assert_binary_shapes(a, b, w);
    let factor = -b * sigmoid(-b * w.column(0).dot(&a));
    let mut out = Array2::zeros((a.len(), 1));
    out.column_mut(0).assign(&a.mapv(|x| factor * x));
    out
}

fn assert_one_hot(b: ArrayView1<f64>) {
    let ones = b.iter().filter(|&&x| x == 1.0).count();
    let zeros = b.iter().filter(|&&x| x == 0.0).count();
    assert!(
        ones == 1 && ones + zeros == b.len(),
        "label vector must be one-hot, got {b:?}"
    );
}

fn class_scores(a: ArrayView1<f64>, w: &ModelMatrix) -> Array1<f64> {
    assert_eq!(a.len(), w.nrows(), "feature length {} != model rows {}", a.len(), w.nrows());
    w.t().dot(&a)
}

fn log_sum_exp(scores: &Array1<f64>) -> f64 {
    let m = scores.fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    m + scores.mapv(|x| (x - m).exp()).sum().ln()
}

/// Multi-class logistic loss for a one-hot label `b` over `p` classes:
/// `log-sum-exp(scores) - score(true class)`.
pub fn multiclass_logistic_loss(a: ArrayView1<f64>, b: ArrayView1<f64>, w: &ModelMatrix) -> f64 {
    assert_one_hot(b);
    assert_eq!(b.len(), w.ncols(), "label classes {} != model columns {}", b.len(), w.ncols());
    let scores = class_scores(a, w);
    let lse = log_sum_exp(&scores);
    b.iter().zip(scores.iter()).map(|(&bh, &sh)| bh * (lse - sh)).sum()
}

/// Gradient of the multi-class logistic loss: column `l` equals
/// `(softmax_l(scores) - b_l) * a`.
pub fn multiclass_logistic_grad(
    a: ArrayView1<f64>,
    b: ArrayView1<f64>,
    w: &ModelMatrix,
) -> ModelMatrix {
    assert_one_hot(b);
    assert_eq!(b.len(), w.ncols(), "label classes {} != model columns {}", b.len(), w.ncols());
    let scores = class_scores(a, w);
    let m = scores.fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
    let exps = scores.mapv(|x| (x - m).exp());
    let total: f64 = exps.sum();
    let mut out = Array2::zeros((a.len(), b.len()));
    for (l, mut col) in out.columns_mut().into_iter().enumerate() {
        let coeff = exps[l] / total - b[l];
        col.assign(&a.mapv(|x| coeff * x));
    }
    out
}

/// Regularizer value: `||w||_1` or `||w||^2 / 2`.
pub fn reg_value(reg: &RegSpec, w: &ModelMatrix) -> f64 {
    match reg.kind {
        RegKind::L1 => w.iter().map(|x| x.abs()).sum(),
        RegKind::L2 => 0.5 * w.iter().map(|x| x * x).sum::<f64>(),
    }
}

/// Regularizer (sub)gradient: entrywise sign with `sgn(0) = 0` for
/// `l1`, or `w` itself for `l2`.
pub fn reg_subgrad(reg: &RegSpec, w: &ModelMatrix) -> ModelMatrix {
    match reg.kind {
        RegKind::L1 => w.mapv(sgn),
        RegKind::L2 => w.clone(),
    }
}

fn binary_scores(shard: &AgentShard, w: &ModelMatrix) -> Array1<f64> {
    assert_eq!(w.ncols(), 1, "shard objectives expect a d x 1 model");
    assert_eq!(shard.features.ncols(), w.nrows(), "shard dim != model rows");
    shard.features.dot(&w.column(0))
}

/// Mean per-sample loss over a shard (no regularizer).
pub fn shard_mean_loss(shard: &AgentShard, loss: &LossSpec, w: &ModelMatrix) -> Result<f64, LossError> {
    if loss.kind != LossKind::BinaryLogistic {
        return Err(LossError::MulticlassShard);
    }
    if shard.is_empty() {
        return Err(LossError::EmptyShard);
    }
    let scores = binary_scores(shard, w);
    let total: f64 = scores
        .iter()
        .zip(shard.labels.iter())
        .map(|(&z, &b)| softplus(-b * z))
        .sum();
    Ok(total / shard.len() as f64)
}

/// Mean per-sample loss gradient over a shard.
pub fn shard_mean_loss_grad(
    shard: &AgentShard,
    loss: &LossSpec,
    w: &ModelMatrix,
) -> Result<ModelMatrix, LossError> {
    if loss.kind != LossKind::BinaryLogistic {
        return Err(LossError::MulticlassShard);
    }
    if shard.is_empty() {
        return Err(LossError::EmptyShard);
    }
    let scores = binary_scores(shard, w);
    let coeff = Array1::from_iter(
        scores
            .iter()
            .zip(shard.labels.iter())
            .map(|(&z, &b)| -b * sigmoid(-b * z) / shard.len() as f64),
    );
    let g = shard.features.t().dot(&coeff);
    let mut out = Array2::zeros((w.nrows(), 1));
    out.column_mut(0).assign(&g);
    Ok(out)
}

/// An agent's local objective
/// `f_i(w) = (1/m_i) sum_j loss_j(w) + (lambda/n) R(w)`.
pub fn shard_objective(
    shard: &AgentShard,
    loss: &LossSpec,
    reg: &RegSpec,
    w: &ModelMatrix,
) -> Result<f64, LossError> {
    Ok(shard_mean_loss(shard, loss, w)? + reg.weight() * reg_value(reg, w))
}

/// Subgradient of [`shard_objective`].
pub fn shard_objective_subgrad(
    shard: &AgentShard,
    loss: &LossSpec,
    reg: &RegSpec,
    w: &ModelMatrix,
) -> Result<ModelMatrix, LossError> {
    let mut g = shard_mean_loss_grad(shard, loss, w)?;
    g.scaled_add(reg.weight(), &reg_subgrad(reg, w));
    Ok(g)
}
