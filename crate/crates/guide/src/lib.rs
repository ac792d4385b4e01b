//! Doc-test shim for the mdbook guide in `book/`.
//!
//! mdbook cannot run Rust snippets as tests by itself, so each chapter
//! is included here as a module's documentation and `cargo test --doc`
//! compiles and runs every fenced `rust` block. One module per chapter
//! keeps a failing snippet traceable to its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/consensus-admm.md")]
pub mod consensus_admm {}

#[doc = include_str!("../../../book/src/linearized-step.md")]
pub mod linearized_step {}

#[doc = include_str!("../../../book/src/noise-calibration.md")]
pub mod noise_calibration {}

#[doc = include_str!("../../../book/src/accounting.md")]
pub mod accounting {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}

#[doc = include_str!("../../../book/src/data-pipeline.md")]
pub mod data_pipeline {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
