//! Configuration-driven experiment runner.
//!
//! [`run_experiment`] executes one configuration over its seed list:
//! ingest/partition, solve, and emit one CSV per seed plus a
//! seed-averaged CSV. [`sweep`] runs a batch of configurations and
//! collects a summary row per config; [`emit_plotdata`] extracts a
//! single metric series for plotting. Wall-clock accounting covers the
//! solver loop only, never ingestion or metric evaluation.

pub mod config;
mod csvio;

pub use config::{Algorithm, ConfigError, DatasetKind, ExperimentConfig, NormalizationScope};
pub use csvio::{
    average_traces, read_averaged_csv, read_trace_csv, write_averaged_csv, write_trace_csv,
    AveragedRow, AveragedTrace, TraceRow, AVERAGED_HEADER, TRACE_HEADER,
};

use crate::data::{
    self, load_adult_corpus, make_synthetic, partition, split_train_test, without_missing,
    AgentShard, DataError, Dataset, Preprocessor,
};
use crate::loss::{LossSpec, RegKind, RegSpec};
use crate::privacy::{self, AccountantReport, PrivacyBudget, PrivacyError};
use crate::solver::{
    run_admm, run_dpadmm, run_dpsgd, run_dvp, run_pvp, EvalSpec, HyperParams, InnerSolverParams,
    RunTrace, SolverError,
};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable naming the dataset cache directory; relative
/// `adult_path` values resolve against it.
pub const DATA_DIR_ENV: &str = "DPADMM_DATA_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error("{path}: {message}")]
    TraceFormat { path: PathBuf, message: String },
    #[error("{0}")]
    TraceMismatch(String),
    #[error("no runs to average")]
    NoRuns,
    #[error("unknown metric {0:?} (expected aug_objective|empirical_loss|test_error|elapsed_s)")]
    UnknownMetric(String),
}

/// One line of the sweep summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub name: String,
    pub algorithm: String,
    /// Seed-averaged final empirical loss.
    pub final_empirical_loss: f64,
    /// Seed-averaged final test error (`NaN` without a test set).
    pub final_test_error: f64,
    /// Total privacy loss; `NaN` for non-private runs.
    pub epsilon_bar: f64,
    /// Seed-averaged solver wall clock, seconds.
    pub runtime_s: f64,
}

/// Everything [`run_experiment`] produces.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub config_hash: String,
    pub run_seeds: Vec<u64>,
    pub per_seed_files: Vec<PathBuf>,
    pub averaged_file: PathBuf,
    pub averaged: AveragedTrace,
    pub traces: Vec<RunTrace>,
    pub accountant: Option<AccountantReport>,
    /// The `c_w` actually used (differs from the config under
    /// `pretrain_c_w`).
    pub c_w_used: f64,
    /// Closed-form utility bound at the configured `t` for scheduled
    /// private runs (dual radius defaulted to `rho * c_w`).
    pub utility_bound: Option<f64>,
    /// Inner-solver iterations per seed, for cost investigations.
    pub inner_iterations: Vec<u64>,
    pub summary: SummaryRow,
}

/// Resolves a dataset path against [`DATA_DIR_ENV`] when relative.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(base) = std::env::var(DATA_DIR_ENV) {
            return Path::new(&base).join(path);
        }
    }
    path.to_path_buf()
}

enum DataSource {
    Synthetic,
    /// Encoded once with full-corpus statistics.
    AdultEncoded(Dataset),
    /// Cleaned raw records; refit per seed on the training split.
    AdultRaw(Vec<data::RawRecord>),
}

fn load_source(config: &ExperimentConfig) -> Result<DataSource, HarnessError> {
    match config.dataset {
        DatasetKind::Synthetic => Ok(DataSource::Synthetic),
        DatasetKind::Adult => {
            let path = resolve_data_path(
                config.adult_path.as_deref().expect("validated: adult_path present"),
            );
            let records = load_adult_corpus(&path)?;
            match config.normalization {
                NormalizationScope::Full => {
                    Ok(DataSource::AdultEncoded(data::preprocess(&records)?))
                }
                NormalizationScope::TrainOnly => {
                    Ok(DataSource::AdultRaw(without_missing(&records)))
                }
            }
        }
    }
}

fn prepare_seed(
    config: &ExperimentConfig,
    source: &DataSource,
    seed: u64,
) -> Result<(Vec<AgentShard>, Dataset), HarnessError> {
    match source {
        DataSource::Synthetic => {
            let synth =
                make_synthetic(config.n, config.m_per_agent, config.dim, config.separation, seed)?;
            let test = synth.sample(config.test_size, config.separation, seed, 0);
            Ok((synth.shards, test))
        }
        DataSource::AdultEncoded(encoded) => {
            let (train, test) = split_train_test(encoded, config.n_train, seed)?;
            Ok((partition(&train, config.n, seed)?, test))
        }
        DataSource::AdultRaw(clean) => {
            let (train_recs, test_recs) = data::split_slice(clean, config.n_train, seed)?;
            let prep = Preprocessor::fit(&train_recs)?;
            let train = prep.transform(&train_recs)?;
            let test = prep.transform(&test_recs)?;
            Ok((partition(&train, config.n, seed)?, test))
        }
    }
}

fn reg_for(config: &ExperimentConfig, d: usize) -> RegSpec {
    let lambda = config.lambda_over_n * config.n as f64;
    match config.regularizer {
        RegKind::L1 => RegSpec::l1(lambda, config.n, d, 1),
        RegKind::L2 => RegSpec::l2(lambda, config.n),
    }
}

fn budget_for(config: &ExperimentConfig) -> Result<Option<PrivacyBudget>, HarnessError> {
    match (config.eps, config.delta) {
        (Some(eps), Some(delta)) => Ok(Some(PrivacyBudget::new(eps, delta)?)),
        _ => Ok(None),
    }
}

fn run_one(
    config: &ExperimentConfig,
    shards: &[AgentShard],
    test: &Dataset,
    seed: u64,
    c_w: f64,
) -> Result<RunTrace, HarnessError> {
    let loss = LossSpec::binary_logistic();
    let d = shards.first().map_or(0, AgentShard::dim);
    let reg = reg_for(config, d);
    let hp = HyperParams { rho: config.rho, t: config.t, c_w, budget: budget_for(config)? };
    let inner =
        InnerSolverParams { tolerance: config.inner_tol, max_iters: config.inner_max_iters };
    let eval = EvalSpec { test: Some(test) };
    let trace = match config.algorithm {
        Algorithm::Admm => run_admm(shards, &loss, &reg, &hp, &inner, eval)?,
        Algorithm::Pvp => {
            run_pvp(shards, &loss, &reg, &hp, &inner, config.noise, eval, seed)?
        }
        Algorithm::Dvp => {
            run_dvp(shards, &loss, &reg, &hp, &inner, config.noise, eval, seed)?
        }
        Algorithm::Dpadmm => run_dpadmm(
            shards,
            &loss,
            &reg,
            &hp,
            config.schedule,
            config.noise,
            eval,
            seed,
        )?,
        Algorithm::Dpsgd => run_dpsgd(
            shards,
            &loss,
            &reg,
            &hp,
            config.lr,
            config.clip,
            config.noise,
            eval,
            seed,
        )?,
    };
    Ok(trace)
}

fn frobenius(m: &crate::ModelMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Estimates `c_w` as the final global model norm of a non-private run
/// on the first seed's data.
fn pretrain_c_w(config: &ExperimentConfig, source: &DataSource) -> Result<f64, HarnessError> {
    let seed = config.seeds[0];
    let (shards, test) = prepare_seed(config, source, seed)?;
    let loss = LossSpec::binary_logistic();
    let d = shards.first().map_or(0, AgentShard::dim);
    let reg = reg_for(config, d);
    let hp = HyperParams { rho: config.rho, t: config.t, c_w: config.c_w, budget: None };
    let inner =
        InnerSolverParams { tolerance: config.inner_tol, max_iters: config.inner_max_iters };
    let trace = run_admm(&shards, &loss, &reg, &hp, &inner, EvalSpec { test: Some(&test) })?;
    Ok(frobenius(&trace.final_global).max(1e-6))
}

/// Runs every seed of `config`, writing `seed_<seed>.csv` per seed and
/// `averaged.csv`, and returns the collected traces and summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|source| HarnessError::Io { path: config.out_dir.clone(), source })?;
    let source = load_source(config)?;
    let c_w = if config.pretrain_c_w { pretrain_c_w(config, &source)? } else { config.c_w };

    let mut traces = Vec::with_capacity(config.seeds.len());
    let mut per_seed_files = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let (shards, test) = prepare_seed(config, &source, seed)?;
        let trace = run_one(config, &shards, &test, seed, c_w)?;
        let path = config.out_dir.join(format!("seed_{seed}.csv"));
        write_trace_csv(&trace, &path)?;
        per_seed_files.push(path);
        traces.push(trace);
    }

    let averaged = average_traces(&traces)?;
    let averaged_file = config.out_dir.join("averaged.csv");
    write_averaged_csv(&averaged, &averaged_file)?;

    let accountant = match (config.algorithm.is_private(), config.eps, config.delta) {
        (true, Some(eps), Some(delta)) => Some(privacy::epsilon_bar(eps, delta, config.t)?),
        _ => None,
    };
    let utility_bound = theoretical_bound(config, &traces, c_w)?;

    let last = averaged.rows.last().expect("t >= 1");
    let summary = SummaryRow {
        name: config.name.clone(),
        algorithm: config.algorithm.to_string(),
        final_empirical_loss: last.empirical_loss,
        final_test_error: last.test_error,
        epsilon_bar: accountant.map_or(f64::NAN, |a| a.epsilon_bar),
        runtime_s: last.elapsed_s,
    };

    Ok(ExperimentOutput {
        config_hash: config.hash(),
        run_seeds: config.seeds.clone(),
        per_seed_files,
        averaged_file,
        averaged,
        inner_iterations: traces.iter().map(|t| t.inner_iterations).collect(),
        traces,
        accountant,
        c_w_used: c_w,
        utility_bound,
        summary,
    })
}

/// The scheduled private solver's closed-form utility bound at the
/// configured horizon, when the constants are defined for the
/// loss/regularizer pair.
fn theoretical_bound(
    config: &ExperimentConfig,
    traces: &[RunTrace],
    c_w: f64,
) -> Result<Option<f64>, HarnessError> {
    let (Some(eps), Some(delta)) = (config.eps, config.delta) else { return Ok(None) };
    if config.algorithm != Algorithm::Dpadmm {
        return Ok(None);
    }
    let d = traces.first().map_or(0, |t| t.final_global.nrows());
    let (c1, c2, c3, c4) =
        crate::loss::standard_bounds(crate::loss::LossKind::BinaryLogistic, config.regularizer, d, 1);
    // Equal shard sizes up to the remainder rule; the bound uses the
    // base size per agent.
    let m_i = match config.dataset {
        DatasetKind::Adult => config.n_train / config.n,
        DatasetKind::Synthetic => config.m_per_agent,
    };
    let sizes = vec![m_i.max(1); config.n];
    let inputs = crate::metrics::BoundInputs {
        c_w,
        c1,
        c2,
        c3,
        c4,
        lambda: config.lambda_over_n * config.n as f64,
        d,
        p: 1,
        eps,
        delta,
        shard_sizes: &sizes,
        rho: config.rho,
        beta: crate::metrics::default_beta(config.rho, c_w),
    };
    let bound = match config.schedule {
        crate::solver::Schedule::Nonsmooth => {
            crate::metrics::utility_bound_nonsmooth(config.t, &inputs)
        }
        crate::solver::Schedule::Smooth => crate::metrics::utility_bound_smooth(config.t, &inputs),
    };
    bound.map(Some).map_err(|e| HarnessError::Solver(SolverError::Metrics(e)))
}

/// Metadata written into plot-data headers.
#[derive(Debug, Clone, Default)]
pub struct PlotMeta {
    pub config_hash: String,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon_bar: Option<f64>,
}

impl PlotMeta {
    /// Pulls the header fields out of a finished experiment.
    pub fn from_output(config: &ExperimentConfig, output: &ExperimentOutput) -> Self {
        Self {
            config_hash: output.config_hash.clone(),
            eps: config.eps,
            delta: config.delta,
            epsilon_bar: output.accountant.map(|a| a.epsilon_bar),
        }
    }
}

fn metric_column(avg: &AveragedTrace, metric: &str) -> Result<Vec<(usize, f64)>, HarnessError> {
    let pick: fn(&AveragedRow) -> f64 = match metric {
        "aug_objective" => |r| r.aug_objective,
        "empirical_loss" => |r| r.empirical_loss,
        "test_error" => |r| r.test_error,
        "elapsed_s" => |r| r.elapsed_s,
        other => return Err(HarnessError::UnknownMetric(other.to_string())),
    };
    Ok(avg.rows.iter().map(|r| (r.k, pick(r))).collect())
}

/// Writes a two-column `(k, metric)` text file with a commented header
/// carrying the config hash and privacy parameters. Unknown metric
/// names fail before the file is created.
pub fn emit_plotdata(
    avg: &AveragedTrace,
    metric: &str,
    path: &Path,
    meta: &PlotMeta,
) -> Result<(), HarnessError> {
    use std::io::Write;
    let column = metric_column(avg, metric)?;
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path)
            .map_err(|source| HarnessError::Io { path: path.into(), source })?,
    );
    let io_err = |source| HarnessError::Io { path: path.into(), source };
    writeln!(out, "# metric={metric} config_hash={}", meta.config_hash).map_err(io_err)?;
    let fmt_opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    writeln!(
        out,
        "# eps={} delta={} eps_bar={}",
        fmt_opt(meta.eps),
        fmt_opt(meta.delta),
        fmt_opt(meta.epsilon_bar)
    )
    .map_err(io_err)?;
    for (k, v) in column {
        writeln!(out, "{k} {v}").map_err(io_err)?;
    }
    Ok(())
}

/// Outcome of a batch of configurations: summary rows for the runs that
/// succeeded, an error message per config that did not.
#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<(PathBuf, String)>,
}

impl SweepOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs each config file in order; invalid configs are reported and
/// skipped.
pub fn sweep(paths: &[PathBuf]) -> SweepOutcome {
    let mut outcome = SweepOutcome::default();
    for path in paths {
        let result = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io { path: path.clone(), source: e })
            .and_then(|text| {
                let stem =
                    path.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
                let config = ExperimentConfig::parse(&text, &stem)?;
                run_experiment(&config)
            });
        match result {
            Ok(output) => outcome.rows.push(output.summary),
            Err(e) => outcome.failures.push((path.clone(), e.to_string())),
        }
    }
    outcome
}

/// Renders summary rows as an aligned text table.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "name                 algorithm  final_loss  test_error     eps_bar   runtime_s\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:<10} {:>10.6} {:>11.6} {:>11.4} {:>11.3}\n",
            r.name, r.algorithm, r.final_empirical_loss, r.final_test_error, r.epsilon_bar,
            r.runtime_s
        ));
    }
    out
}

/// Writes the sweep summary as CSV.
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), HarnessError> {
    use std::io::Write;
    let io_err = |source| HarnessError::Io { path: path.into(), source };
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(out, "name,algorithm,final_empirical_loss,final_test_error,eps_bar,runtime_s")
        .map_err(io_err)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name, r.algorithm, r.final_empirical_loss, r.final_test_error, r.epsilon_bar,
            r.runtime_s
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_config(dir: &Path, algorithm: &str, seeds: &str) -> ExperimentConfig {
        let text = format!(
            "algorithm = {algorithm}\n\
             dataset = synthetic\n\
             regularizer = l2\n\
             n = 3\n\
             t = 6\n\
             rho = 0.5\n\
             lambda_over_n = 1e-3\n\
             eps = 0.2\n\
             delta = 1e-3\n\
             seeds = {seeds}\n\
             m_per_agent = 40\n\
             dim = 5\n\
             separation = 1.0\n\
             test_size = 50\n\
             out_dir = {}\n",
            dir.display()
        );
        ExperimentConfig::parse(&text, "test-run").unwrap()
    }

    #[test]
    fn experiment_emits_per_seed_and_averaged_files() {
        let tmp = tempfile::tempdir().unwrap();
        let config = synthetic_config(&tmp.path().join("out"), "dpadmm", "1,2,3");
        let output = run_experiment(&config).unwrap();
        assert_eq!(output.per_seed_files.len(), 3);
        for f in &output.per_seed_files {
            assert!(f.exists());
        }
        assert!(output.averaged_file.exists());
        assert_eq!(output.averaged.rows.len(), 6);
        let report = output.accountant.unwrap();
        assert_eq!(report.t, 6);
        assert!((output.summary.epsilon_bar - report.epsilon_bar).abs() < 1e-15);
        assert!(output.summary.final_empirical_loss.is_finite());
        assert!(output.summary.final_test_error.is_finite());
    }

    #[test]
    fn per_seed_output_is_reproducible_except_wall_clock() {
        let tmp = tempfile::tempdir().unwrap();
        let c1 = synthetic_config(&tmp.path().join("a"), "dpadmm", "42");
        let c2 = synthetic_config(&tmp.path().join("b"), "dpadmm", "42");
        let o1 = run_experiment(&c1).unwrap();
        let o2 = run_experiment(&c2).unwrap();
        let r1 = read_trace_csv(&o1.per_seed_files[0]).unwrap();
        let r2 = read_trace_csv(&o2.per_seed_files[0]).unwrap();
        assert_eq!(r1.len(), r2.len());
        for (a, b) in r1.iter().zip(r2.iter()) {
            assert_eq!(a.k, b.k);
            // Deterministic computation: bit-identical metric columns.
            assert_eq!(a.aug_objective.to_bits(), b.aug_objective.to_bits());
            assert_eq!(a.empirical_loss.to_bits(), b.empirical_loss.to_bits());
            assert_eq!(a.test_error.to_bits(), b.test_error.to_bits());
            // Wall clock is measurement, not computation; it may differ.
        }
    }

    #[test]
    fn plotdata_header_and_rows() {
        let tmp = tempfile::tempdir().unwrap();
        let config = synthetic_config(&tmp.path().join("out"), "dpadmm", "7");
        let output = run_experiment(&config).unwrap();
        let meta = PlotMeta::from_output(&config, &output);
        let path = tmp.path().join("plot.dat");
        emit_plotdata(&output.averaged, "empirical_loss", &path, &meta).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().contains(&output.config_hash));
        let header = lines.next().unwrap();
        assert!(header.contains("eps=0.2"));
        let expected = crate::privacy::epsilon_bar(0.2, 1e-3, 6).unwrap().epsilon_bar;
        assert!(
            header.contains(&format!("eps_bar={expected}")),
            "header {header:?} should carry the accountant value {expected}"
        );
        assert_eq!(lines.count(), 6, "one row per iteration");

        let missing = tmp.path().join("missing.dat");
        assert!(emit_plotdata(&output.averaged, "no_such_metric", &missing, &meta).is_err());
        assert!(!missing.exists(), "no file on unknown metric");
    }

    #[test]
    fn ten_seeds_emit_eleven_csv_files() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("out");
        let config = synthetic_config(&out, "dpsgd", "1,2,3,4,5,6,7,8,9,10");
        run_experiment(&config).unwrap();
        let csvs = std::fs::read_dir(&out)
            .unwrap()
            .filter(|e| {
                e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")
            })
            .count();
        assert_eq!(csvs, 11, "ten per-seed files plus the averaged one");
    }

    #[test]
    fn pretraining_replaces_the_default_c_w() {
        let tmp = tempfile::tempdir().unwrap();
        let text = format!(
            "algorithm = dpadmm\ndataset = synthetic\nregularizer = l2\nn = 2\nt = 4\n\
             rho = 0.5\nlambda_over_n = 1e-2\neps = 0.2\ndelta = 1e-3\nseeds = 3\n\
             m_per_agent = 30\ndim = 4\ntest_size = 20\npretrain_c_w = true\nout_dir = {}\n",
            tmp.path().join("out").display()
        );
        let config = ExperimentConfig::parse(&text, "pretrain").unwrap();
        let output = run_experiment(&config).unwrap();
        assert_ne!(output.c_w_used, config.c_w, "pretraining should estimate c_w");
        assert!(output.c_w_used > 0.0 && output.c_w_used < config.c_w);
    }

    #[test]
    fn train_only_normalization_refits_per_seed() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("adult.data");
        let mut lines = String::new();
        for i in 0..12 {
            let (work, label) = if i % 2 == 0 {
                ("Private", ">50K")
            } else {
                ("State-gov", "<=50K")
            };
            let country = if i == 11 { "Peru" } else { "United-States" };
            lines.push_str(&format!(
                "{}, {work}, {}, Bachelors, 13, Divorced, Sales, Husband, White, Male, 0, 0, 40, {country}, {label}\n",
                20 + i,
                10_000 + i
            ));
        }
        lines.push_str(
            "99, ?, 1, Bachelors, 13, Divorced, Sales, Husband, White, Male, 0, 0, 40, United-States, >50K\n",
        );
        std::fs::write(&corpus, lines).unwrap();

        let text = format!(
            "algorithm = admm\ndataset = adult\nregularizer = l2\nn = 2\nt = 2\nrho = 0.5\n\
             lambda_over_n = 0.1\nseeds = 1,2\nn_train = 8\nnormalize = train\n\
             adult_path = {}\nout_dir = {}\n",
            corpus.display(),
            tmp.path().join("out").display()
        );
        let config = ExperimentConfig::parse(&text, "adult-small").unwrap();
        let output = run_experiment(&config).unwrap();
        assert_eq!(output.per_seed_files.len(), 2);
        assert_eq!(output.averaged.rows.len(), 2);
        assert!(output.accountant.is_none(), "admm is non-private");
        assert!(output.summary.epsilon_bar.is_nan());
        // The 12 usable records split 8/4; the Peru row may land in the
        // test split unseen at fit time and must still encode.
        assert!(output.summary.final_test_error.is_finite());
    }

    #[test]
    fn sweep_reports_failures_and_successes() {
        let tmp = tempfile::tempdir().unwrap();
        let good = tmp.path().join("good.conf");
        std::fs::write(
            &good,
            format!(
                "algorithm = dpsgd\ndataset = synthetic\nregularizer = l2\nn = 2\nt = 3\n\
                 rho = 0.1\nlambda_over_n = 0\neps = 0.1\ndelta = 1e-3\nseeds = 1\n\
                 m_per_agent = 20\ndim = 4\ntest_size = 30\nout_dir = {}\n",
                tmp.path().join("good-out").display()
            ),
        )
        .unwrap();
        let bad = tmp.path().join("bad.conf");
        std::fs::write(&bad, "algorithm = pvp\n").unwrap();

        let outcome = sweep(&[good.clone(), bad.clone()]);
        assert_eq!(outcome.rows.len(), 1);
        assert_eq!(outcome.failures.len(), 1);
        assert!(!outcome.all_succeeded());
        assert_eq!(outcome.failures[0].0, bad);
        let table = summary_table(&outcome.rows);
        assert!(table.contains("dpsgd"));

        let csv = tmp.path().join("summary.csv");
        write_summary_csv(&outcome.rows, &csv).unwrap();
        assert!(std::fs::read_to_string(&csv).unwrap().lines().count() == 2);
    }
}
