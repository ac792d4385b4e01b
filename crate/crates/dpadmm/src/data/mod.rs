//! Dataset ingestion, normalization, splitting, and sharding.
//!
//! The adult submodule parses and encodes the UCI Adult census files;
//! the synthetic one plants a linear separator for desk-scale fixtures. Both
//! produce [`Dataset`] values whose rows have `l2` norm at most 1 and
//! whose columns have maximum absolute value at most 1, the preconditions
//! the loss bounds rely on. All randomized operations here are pure
//! functions of their inputs and a seed.

mod adult;
mod synthetic;

pub use adult::{load_adult, load_adult_corpus, preprocess, without_missing, Preprocessor, RawRecord};
pub use synthetic::{make_synthetic, SyntheticData};

use crate::rng;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from ingestion and sharding.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("attribute {attribute:?} has unknown level {level:?}")]
    Schema { attribute: &'static str, level: String },
    #[error("{0}")]
    Argument(String),
}

/// An encoded dataset: one feature row and one `{+1, -1}` label per
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
}

/// One agent's private shard. Shards of a partition are disjoint and
/// jointly cover the training set.
pub type AgentShard = Dataset;

impl Dataset {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: self.labels.select(Axis(0), indices),
        }
    }

    /// Largest row `l2` norm.
    pub fn max_row_norm(&self) -> f64 {
        self.features
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest absolute column value.
    pub fn max_col_abs(&self) -> f64 {
        self.features.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()))
    }

    /// Writes the documented CSV form: header `f0..f{d-1},label`, one
    /// row per sample.
    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let io_err = |source| DataError::Io { path: path.into(), source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        let result: std::io::Result<()> = (|| {
            let header: Vec<String> = (0..self.dim()).map(|j| format!("f{j}")).collect();
            writeln!(out, "{},label", header.join(","))?;
            for (row, &label) in self.features.rows().into_iter().zip(self.labels.iter()) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{},{}", cells.join(","), label)?;
            }
            Ok(())
        })();
        result.map_err(io_err)
    }

    /// Reads a file produced by [`Dataset::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Dataset, DataError> {
        let file = std::fs::File::open(path)
            .map_err(|source| DataError::Io { path: path.into(), source })?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| DataError::Parse { line: 1, message: "empty file".into() })?;
        let header = header.map_err(|source| DataError::Io { path: path.into(), source })?;
        let dim = header.split(',').count().saturating_sub(1);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|source| DataError::Io { path: path.into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(DataError::Parse {
                    line: idx + 1,
                    message: format!("expected {} fields, found {}", dim + 1, fields.len()),
                });
            }
            for f in &fields[..dim] {
                rows.push(f.parse::<f64>().map_err(|e| DataError::Parse {
                    line: idx + 1,
                    message: format!("bad number {f:?}: {e}"),
                })?);
            }
            labels.push(fields[dim].parse::<f64>().map_err(|e| DataError::Parse {
                line: idx + 1,
                message: format!("bad label {:?}: {e}", fields[dim]),
            })?);
        }
        let n = labels.len();
        Ok(Dataset {
            features: Array2::from_shape_vec((n, dim), rows)
                .expect("row-major shape by construction"),
            labels: Array1::from_vec(labels),
        })
    }
}

fn shuffled_indices(n: usize, seed: u64, purpose: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng::substream(seed, &[purpose]));
    indices
}

/// Uniformly random split without replacement, deterministic in `seed`:
/// `n_train` rows for training, the rest for testing.
pub fn split_train_test(
    data: &Dataset,
    n_train: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if n_train > data.len() {
        return Err(DataError::Argument(format!(
            "cannot take {n_train} training rows from {} available",
            data.len()
        )));
    }
    let indices = shuffled_indices(data.len(), seed, rng::tag::SPLIT);
    Ok((
        data.select_rows(&indices[..n_train]),
        data.select_rows(&indices[n_train..]),
    ))
}

/// Splits any slice with the same seeded permutation as
/// [`split_train_test`], for pipelines that must split before encoding.
pub fn split_slice<T: Clone>(
    items: &[T],
    n_train: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), DataError> {
    if n_train > items.len() {
        return Err(DataError::Argument(format!(
            "cannot take {n_train} training items from {} available",
            items.len()
        )));
    }
    let indices = shuffled_indices(items.len(), seed, rng::tag::SPLIT);
    let pick = |range: &[usize]| range.iter().map(|&i| items[i].clone()).collect();
    Ok((pick(&indices[..n_train]), pick(&indices[n_train..])))
}

/// Randomly divides `train` into `n` disjoint shards covering it, sizes
/// differing by at most one (extra rows go to the lowest-indexed shards).
pub fn partition(train: &Dataset, n: usize, seed: u64) -> Result<Vec<AgentShard>, DataError> {
    if n == 0 || n > train.len() {
        return Err(DataError::Argument(format!(
            "cannot partition {} rows into {n} shards",
            train.len()
        )));
    }
    let indices = shuffled_indices(train.len(), seed, rng::tag::PARTITION);
    let base = train.len() / n;
    let extra = train.len() % n;
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        shards.push(train.select_rows(&indices[start..start + size]));
        start += size;
    }
    Ok(shards)
}
