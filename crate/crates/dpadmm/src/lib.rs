//! Differentially private distributed learning over consensus ADMM.
//!
//! This crate simulates a star topology in which `n` agents hold private
//! data shards and collaborate, through a central aggregator, on a
//! regularized empirical risk minimization problem. It provides:
//!
//! - [`data`]: ingestion of the UCI Adult census data (cleaning, one-hot
//!   encoding, column/row normalization, train/test split, sharding) and
//!   synthetic shard generators for desk-scale experiments.
//! - [`loss`]: binary and multi-class logistic losses, `l1`/`l2`
//!   regularizers, their (sub)gradients, and the curvature constants that
//!   feed noise calibration and step-size schedules.
//! - [`privacy`]: `l2` sensitivity formulas, Gaussian mechanism
//!   calibration, matrix noise sampling, and a moments accountant that
//!   converts a per-iteration budget into an end-to-end guarantee.
//! - [`solver`]: five training algorithms — plain consensus ADMM, ADMM
//!   with primal or dual variable perturbation, a linearized private ADMM
//!   with time-varying noise (DP-ADMM), and distributed DP-SGD.
//! - [`metrics`]: augmented objective, empirical loss, classification
//!   error, and closed-form utility bounds for reporting.
//! - [`harness`]: a configuration-driven experiment runner with seeded
//!   repetitions, CSV emission, and wall-clock accounting.
//!
//! Every randomized operation is a pure function of its inputs and a seed;
//! see [`rng`] for the substream derivation that keeps parallel runs
//! reproducible. The `book/` directory of the repository walks through the
//! concepts chapter by chapter with runnable snippets.

pub mod data;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod privacy;
pub mod rng;
pub mod solver;

/// A `d x p` real matrix of model coefficients.
///
/// Binary classification uses `p = 1`; multi-class models hold one column
/// per class. The same shape carries primal iterates, their perturbed
/// copies, dual variables, noise draws, and running averages.
pub type ModelMatrix = ndarray::Array2<f64>;

pub use data::{AgentShard, Dataset};
pub use loss::{LossSpec, RegSpec};
pub use privacy::{AccountantReport, PrivacyBudget};
pub use solver::{HyperParams, NoiseMode, RunTrace, Schedule};
