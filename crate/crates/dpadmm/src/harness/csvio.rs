//! Trace CSV emission and parsing.
//!
//! Per-seed files carry the schema
//! `k,aug_objective,empirical_loss,test_error,elapsed_s`; the
//! seed-averaged file appends a `*_stddev` column per metric. Floats are
//! written with Rust's shortest round-trip formatting, so
//! `parse(emit(x)) == x` bit for bit (`NaN` included, used for a missing
//! test set).

use super::HarnessError;
use crate::solver::{IterationRecord, RunTrace};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const TRACE_HEADER: &str = "k,aug_objective,empirical_loss,test_error,elapsed_s";
pub const AVERAGED_HEADER: &str = "k,aug_objective,empirical_loss,test_error,elapsed_s,\
aug_objective_stddev,empirical_loss_stddev,test_error_stddev,elapsed_s_stddev";

/// One row of a per-seed trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub aug_objective: f64,
    pub empirical_loss: f64,
    pub test_error: f64,
    pub elapsed_s: f64,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            k: r.k,
            aug_objective: r.augmented_objective,
            empirical_loss: r.empirical_loss,
            test_error: r.test_error,
            elapsed_s: r.elapsed_s,
        }
    }
}

/// One row of a seed-averaged file: per-metric mean and sample standard
/// deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedRow {
    pub k: usize,
    pub aug_objective: f64,
    pub empirical_loss: f64,
    pub test_error: f64,
    pub elapsed_s: f64,
    pub aug_objective_stddev: f64,
    pub empirical_loss_stddev: f64,
    pub test_error_stddev: f64,
    pub elapsed_s_stddev: f64,
}

/// A seed-averaged trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedTrace {
    pub rows: Vec<AveragedRow>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.into(), source }
}

/// Writes a per-seed trace file.
pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<(), HarnessError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(out, "{TRACE_HEADER}").map_err(io_err(path))?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.k, r.augmented_objective, r.empirical_loss, r.test_error, r.elapsed_s
        )
        .map_err(io_err(path))?;
    }
    Ok(())
}

fn parse_fields(path: &Path, line_no: usize, line: &str, want: usize) -> Result<Vec<f64>, HarnessError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != want {
        return Err(HarnessError::TraceFormat {
            path: path.into(),
            message: format!("line {line_no}: expected {want} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|e| HarnessError::TraceFormat {
                path: path.into(),
                message: format!("line {line_no}: bad number {f:?}: {e}"),
            })
        })
        .collect()
}

/// Reads a per-seed trace file back.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, HarnessError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == TRACE_HEADER => {}
        other => {
            return Err(HarnessError::TraceFormat {
                path: path.into(),
                message: format!("bad header {other:?}, expected {TRACE_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let f = parse_fields(path, idx + 2, &line, 5)?;
        rows.push(TraceRow {
            k: f[0] as usize,
            aug_objective: f[1],
            empirical_loss: f[2],
            test_error: f[3],
            elapsed_s: f[4],
        });
    }
    Ok(rows)
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Averages aligned traces across seeds. All traces must have the same
/// iteration count.
pub fn average_traces(traces: &[RunTrace]) -> Result<AveragedTrace, HarnessError> {
    let first = traces.first().ok_or(HarnessError::NoRuns)?;
    let t = first.records.len();
    if traces.iter().any(|tr| tr.records.len() != t) {
        return Err(HarnessError::TraceMismatch(
            "traces have differing iteration counts".into(),
        ));
    }
    let mut rows = Vec::with_capacity(t);
    for idx in 0..t {
        let column = |f: &dyn Fn(&IterationRecord) -> f64| -> Vec<f64> {
            traces.iter().map(|tr| f(&tr.records[idx])).collect()
        };
        let (aug, aug_sd) = mean_and_std(&column(&|r| r.augmented_objective));
        let (emp, emp_sd) = mean_and_std(&column(&|r| r.empirical_loss));
        let (test, test_sd) = mean_and_std(&column(&|r| r.test_error));
        let (el, el_sd) = mean_and_std(&column(&|r| r.elapsed_s));
        rows.push(AveragedRow {
            k: first.records[idx].k,
            aug_objective: aug,
            empirical_loss: emp,
            test_error: test,
            elapsed_s: el,
            aug_objective_stddev: aug_sd,
            empirical_loss_stddev: emp_sd,
            test_error_stddev: test_sd,
            elapsed_s_stddev: el_sd,
        });
    }
    Ok(AveragedTrace { rows })
}

/// Writes the seed-averaged file.
pub fn write_averaged_csv(avg: &AveragedTrace, path: &Path) -> Result<(), HarnessError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(out, "{AVERAGED_HEADER}").map_err(io_err(path))?;
    for r in &avg.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            r.aug_objective,
            r.empirical_loss,
            r.test_error,
            r.elapsed_s,
            r.aug_objective_stddev,
            r.empirical_loss_stddev,
            r.test_error_stddev,
            r.elapsed_s_stddev
        )
        .map_err(io_err(path))?;
    }
    Ok(())
}

/// Reads a seed-averaged file back.
pub fn read_averaged_csv(path: &Path) -> Result<AveragedTrace, HarnessError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == AVERAGED_HEADER => {}
        other => {
            return Err(HarnessError::TraceFormat {
                path: path.into(),
                message: format!("bad header {other:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let f = parse_fields(path, idx + 2, &line, 9)?;
        rows.push(AveragedRow {
            k: f[0] as usize,
            aug_objective: f[1],
            empirical_loss: f[2],
            test_error: f[3],
            elapsed_s: f[4],
            aug_objective_stddev: f[5],
            empirical_loss_stddev: f[6],
            test_error_stddev: f[7],
            elapsed_s_stddev: f[8],
        });
    }
    Ok(AveragedTrace { rows })
}
