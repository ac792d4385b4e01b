//! Command-line front end: `run` one experiment config, `sweep` a
//! directory of configs, `account` total privacy loss, `ingest` the
//! Adult corpus into the documented CSV form.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dpadmm::harness::{
    self, emit_plotdata, run_experiment, summary_table, sweep, write_summary_csv,
    ExperimentConfig, PlotMeta,
};
use dpadmm::privacy;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dpadmm",
    about = "Differentially private consensus ADMM experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration over its seed list.
    Run {
        /// Path to a `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Also emit `<metric>.dat` plot series into the run's out_dir.
        #[arg(long, value_delimiter = ',')]
        plot: Vec<String>,
    },
    /// Run every `*.conf` file in a directory and print a summary table.
    Sweep {
        /// Directory containing config files.
        #[arg(long = "config-dir")]
        config_dir: PathBuf,
        /// Where to write the summary CSV (default: `<config-dir>/summary.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Total privacy loss of t iterations at a per-iteration budget, or
    /// the per-iteration budget that meets a total target.
    Account {
        /// Per-iteration epsilon in (0, 1].
        #[arg(long)]
        eps: Option<f64>,
        /// Failure probability delta in (0, 0.01].
        #[arg(long)]
        delta: f64,
        /// Iteration count.
        #[arg(long)]
        iters: usize,
        /// Total-budget target to invert instead.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Parse, clean, encode, and normalize Adult data, then dump the
    /// documented `f0..f{d-1},label` CSV.
    Ingest {
        /// Adult corpus: a directory with adult.data/adult.test or a
        /// single file. Relative paths resolve against DPADMM_DATA_DIR.
        #[arg(long)]
        adult: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn cmd_run(config_path: &Path, plots: &[String]) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let stem = config_path
        .file_stem()
        .map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
    let config = ExperimentConfig::parse(&text, &stem)?;
    println!("config {} (hash {})", config.name, config.hash());
    println!("seeds: {:?}", config.seeds);

    let output = run_experiment(&config)?;
    if output.c_w_used != config.c_w {
        println!("pretrained c_w = {:.4}", output.c_w_used);
    }
    if let Some(report) = output.accountant {
        println!(
            "total privacy loss: eps_bar = {:.4} (tau* = {}) at delta = {}",
            report.epsilon_bar,
            report.tau_star,
            config.delta.unwrap_or(f64::NAN)
        );
    }
    if let Some(bound) = output.utility_bound {
        println!("theoretical utility bound at t = {}: {bound:.4}", config.t);
    }
    let inner: u64 = output.inner_iterations.iter().sum();
    if inner > 0 {
        println!("inner-solver iterations: {:?}", output.inner_iterations);
    }
    for path in &output.per_seed_files {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", output.averaged_file.display());

    let meta = PlotMeta::from_output(&config, &output);
    for metric in plots {
        let path = config.out_dir.join(format!("{metric}.dat"));
        emit_plotdata(&output.averaged, metric, &path, &meta)?;
        println!("wrote {}", path.display());
    }
    let s = &output.summary;
    println!(
        "final: empirical_loss = {:.6}, test_error = {:.6}, solver_time = {:.3}s",
        s.final_empirical_loss, s.final_test_error, s.runtime_s
    );
    Ok(())
}

fn cmd_sweep(config_dir: &Path, out: &Option<PathBuf>) -> Result<bool> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(config_dir)
        .with_context(|| format!("listing {}", config_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "conf"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no *.conf files in {}", config_dir.display());
    }
    let outcome = sweep(&paths);
    print!("{}", summary_table(&outcome.rows));
    let csv = out.clone().unwrap_or_else(|| config_dir.join("summary.csv"));
    write_summary_csv(&outcome.rows, &csv)?;
    println!("wrote {}", csv.display());
    for (path, message) in &outcome.failures {
        eprintln!("FAILED {}: {message}", path.display());
    }
    Ok(outcome.all_succeeded())
}

fn cmd_account(eps: Option<f64>, delta: f64, iters: usize, target: Option<f64>) -> Result<()> {
    let floor = privacy::delta_floor(delta)?;
    match (eps, target) {
        (_, Some(target)) => {
            let eps = privacy::per_iteration_epsilon(target, delta, iters)?;
            let report = privacy::epsilon_bar(eps, delta, iters)?;
            println!(
                "per-iteration eps = {eps:.6} reaches eps_bar = {:.6} (tau* = {}) over {iters} \
                 iterations at delta = {delta}",
                report.epsilon_bar, report.tau_star
            );
            println!("delta floor (smallest reachable eps_bar): {floor:.6e}");
        }
        (Some(eps), None) => {
            let report = privacy::epsilon_bar(eps, delta, iters)?;
            println!(
                "eps_bar = {:.4} (tau* = {}) for {iters} iterations at eps = {eps}, delta = {delta}",
                report.epsilon_bar, report.tau_star
            );
            println!("delta floor (smallest reachable eps_bar): {floor:.6e}");
        }
        (None, None) => bail!("pass --eps to compose forward or --target to invert"),
    }
    Ok(())
}

fn cmd_ingest(adult: &Path, out: &Path) -> Result<()> {
    let path = harness::resolve_data_path(adult);
    let records = dpadmm::data::load_adult_corpus(&path)
        .with_context(|| format!("loading {}", path.display()))?;
    println!("loaded {} records", records.len());
    let data = dpadmm::data::preprocess(&records)?;
    println!(
        "encoded {} rows, {} features (max row norm {:.6}, max column {:.6})",
        data.len(),
        data.dim(),
        data.max_row_norm(),
        data.max_col_abs()
    );
    data.write_csv(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe (head, grep) closes early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, plot } => cmd_run(config, plot).map(|()| true),
        Command::Sweep { config_dir, out } => cmd_sweep(config_dir, out),
        Command::Account { eps, delta, iters, target } => {
            cmd_account(*eps, *delta, *iters, *target).map(|()| true)
        }
        Command::Ingest { adult, out } => cmd_ingest(adult, out).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
