//! Flat key-value experiment configuration.
//!
//! A config file is a list of `key = value` lines; `#` starts a comment
//! line and blank lines are ignored. Unknown or duplicate keys are
//! errors, so typos fail fast. Defaults are documented per key in
//! [`ExperimentConfig`]; the canonical serialization (and hence the
//! config hash) covers every effective field after defaulting.

use crate::loss::RegKind;
use crate::solver::{NoiseMode, Schedule};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key {0:?}")]
    MissingKey(&'static str),
    #[error("key {key:?}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// Which training algorithm a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Admm,
    Pvp,
    Dvp,
    Dpadmm,
    Dpsgd,
}

impl Algorithm {
    pub fn is_private(self) -> bool {
        !matches!(self, Algorithm::Admm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Admm => "admm",
            Algorithm::Pvp => "pvp",
            Algorithm::Dvp => "dvp",
            Algorithm::Dpadmm => "dpadmm",
            Algorithm::Dpsgd => "dpsgd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Adult,
    Synthetic,
}

/// Where normalization statistics come from: the full corpus before
/// splitting (the default) or the training split only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationScope {
    Full,
    TrainOnly,
}

/// A fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Run name; defaults to the config file stem. Output files land in
    /// `out_dir`.
    pub name: String,
    pub algorithm: Algorithm,
    pub dataset: DatasetKind,
    pub regularizer: RegKind,
    /// Step-size schedule for `dpadmm`; defaults to the regularizer's
    /// natural one (`l1 -> nonsmooth`, `l2 -> smooth`).
    pub schedule: Schedule,
    /// Agent count.
    pub n: usize,
    /// Outer iterations.
    pub t: usize,
    pub rho: f64,
    /// The per-agent regularizer weight `lambda / n`; the global weight
    /// is this times `n`.
    pub lambda_over_n: f64,
    /// Per-iteration privacy budget; required for private algorithms.
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    /// Model-norm bound for schedules. Defaults: 23 for `l1`, 89 for
    /// `l2`.
    pub c_w: f64,
    /// Estimate `c_w` by a non-private pre-training run instead of the
    /// default constant.
    pub pretrain_c_w: bool,
    /// Explicit seed list, or expansion of `master_seed`/`repetitions`.
    pub seeds: Vec<u64>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Gradient-descent step for `dpsgd`.
    pub lr: f64,
    /// Per-sample clip norm for `dpsgd`.
    pub clip: f64,
    pub noise: NoiseMode,
    pub out_dir: PathBuf,
    /// Adult corpus location (file or directory); relative paths resolve
    /// against the `DPADMM_DATA_DIR` environment variable when set.
    pub adult_path: Option<PathBuf>,
    pub n_train: usize,
    pub normalization: NormalizationScope,
    /// Synthetic generator parameters.
    pub m_per_agent: usize,
    pub dim: usize,
    pub separation: f64,
    pub test_size: usize,
}

const KEYS: &[&str] = &[
    "name", "algorithm", "dataset", "regularizer", "schedule", "n", "t", "rho",
    "lambda_over_n", "eps", "delta", "c_w", "pretrain_c_w", "seeds", "master_seed",
    "repetitions", "inner_tol", "inner_max_iters", "lr", "clip", "noise", "out_dir",
    "adult_path", "n_train", "normalize", "m_per_agent", "dim", "separation", "test_size",
];

fn parse_lines(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed { line, text: trimmed.to_string() })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if map.insert(key.clone(), (line, value)).is_some() {
            return Err(ConfigError::DuplicateKey { line, key });
        }
    }
    Ok(map)
}

struct Raw(BTreeMap<String, (usize, String)>);

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::MissingKey(key))
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(text) => text.parse().map(Some).map_err(|e| ConfigError::Invalid {
                key,
                message: format!("cannot parse {text:?}: {e}"),
            }),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }
}

impl ExperimentConfig {
    /// Parses a config from text. `default_name` is used when no `name`
    /// key is present (callers pass the file stem).
    pub fn parse(text: &str, default_name: &str) -> Result<Self, ConfigError> {
        let raw = Raw(parse_lines(text)?);

        let algorithm = match raw.required("algorithm")? {
            "admm" => Algorithm::Admm,
            "pvp" => Algorithm::Pvp,
            "dvp" => Algorithm::Dvp,
            "dpadmm" => Algorithm::Dpadmm,
            "dpsgd" => Algorithm::Dpsgd,
            other => {
                return Err(ConfigError::Invalid {
                    key: "algorithm",
                    message: format!("expected admm|pvp|dvp|dpadmm|dpsgd, got {other:?}"),
                })
            }
        };
        let dataset = match raw.required("dataset")? {
            "adult" => DatasetKind::Adult,
            "synthetic" => DatasetKind::Synthetic,
            other => {
                return Err(ConfigError::Invalid {
                    key: "dataset",
                    message: format!("expected adult|synthetic, got {other:?}"),
                })
            }
        };
        let regularizer = match raw.required("regularizer")? {
            "l1" => RegKind::L1,
            "l2" => RegKind::L2,
            other => {
                return Err(ConfigError::Invalid {
                    key: "regularizer",
                    message: format!("expected l1|l2, got {other:?}"),
                })
            }
        };
        let schedule = match raw.get("schedule") {
            None => match regularizer {
                RegKind::L1 => Schedule::Nonsmooth,
                RegKind::L2 => Schedule::Smooth,
            },
            Some("nonsmooth") => Schedule::Nonsmooth,
            Some("smooth") => Schedule::Smooth,
            Some(other) => {
                return Err(ConfigError::Invalid {
                    key: "schedule",
                    message: format!("expected nonsmooth|smooth, got {other:?}"),
                })
            }
        };
        let noise = match raw.get("noise") {
            None | Some("on") => NoiseMode::Calibrated,
            Some("off") => NoiseMode::Disabled,
            Some(other) => {
                return Err(ConfigError::Invalid {
                    key: "noise",
                    message: format!("expected on|off, got {other:?}"),
                })
            }
        };

        let seeds = match raw.get("seeds") {
            Some(list) => {
                let seeds: Result<Vec<u64>, _> = list
                    .split(',')
                    .map(|s| s.trim().parse::<u64>())
                    .collect();
                seeds.map_err(|e| ConfigError::Invalid {
                    key: "seeds",
                    message: format!("expected comma-separated integers: {e}"),
                })?
            }
            None => {
                let master: u64 = raw.parse("master_seed")?.ok_or(ConfigError::MissingKey(
                    "seeds (or master_seed with repetitions)",
                ))?;
                let reps: usize = raw.parse_or("repetitions", 1)?;
                (0..reps as u64)
                    .map(|j| crate::rng::derive_seed(master, &[crate::rng::tag::RUN, j]))
                    .collect()
            }
        };

        let c_w = raw.parse(
            "c_w",
        )?
        .unwrap_or(match regularizer {
            RegKind::L1 => 23.0,
            RegKind::L2 => 89.0,
        });

        let config = ExperimentConfig {
            name: raw.get("name").unwrap_or(default_name).to_string(),
            algorithm,
            dataset,
            regularizer,
            schedule,
            n: raw.parse("n")?.ok_or(ConfigError::MissingKey("n"))?,
            t: raw.parse("t")?.ok_or(ConfigError::MissingKey("t"))?,
            rho: raw.parse("rho")?.ok_or(ConfigError::MissingKey("rho"))?,
            lambda_over_n: raw
                .parse("lambda_over_n")?
                .ok_or(ConfigError::MissingKey("lambda_over_n"))?,
            eps: raw.parse("eps")?,
            delta: raw.parse("delta")?,
            c_w,
            pretrain_c_w: raw.parse_or("pretrain_c_w", false)?,
            seeds,
            inner_tol: raw.parse_or("inner_tol", 1e-6)?,
            inner_max_iters: raw.parse_or("inner_max_iters", 500)?,
            lr: raw.parse_or("lr", 0.1)?,
            clip: raw.parse_or("clip", 1.0)?,
            noise,
            out_dir: PathBuf::from(raw.required("out_dir")?),
            adult_path: raw.get("adult_path").map(PathBuf::from),
            n_train: raw.parse_or("n_train", 40_000)?,
            normalization: match raw.get("normalize") {
                None | Some("full") => NormalizationScope::Full,
                Some("train") => NormalizationScope::TrainOnly,
                Some(other) => {
                    return Err(ConfigError::Invalid {
                        key: "normalize",
                        message: format!("expected full|train, got {other:?}"),
                    })
                }
            },
            m_per_agent: raw.parse_or("m_per_agent", 400)?,
            dim: raw.parse_or("dim", 10)?,
            separation: raw.parse_or("separation", 1.0)?,
            test_size: raw.parse_or("test_size", 1000)?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Cross-field validity checks; run before any compute.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key, message: String| Err(ConfigError::Invalid { key, message });
        if self.n == 0 || self.t == 0 {
            return invalid("n", "agent and iteration counts must be positive".into());
        }
        if self.rho.is_nan() || self.rho <= 0.0 {
            return invalid("rho", format!("must be positive, got {}", self.rho));
        }
        if self.lambda_over_n < 0.0 {
            return invalid("lambda_over_n", "must be non-negative".into());
        }
        if self.seeds.is_empty() {
            return invalid("seeds", "at least one seed is required".into());
        }
        if matches!(self.algorithm, Algorithm::Pvp | Algorithm::Dvp)
            && (self.regularizer != RegKind::L2 || self.lambda_over_n <= 0.0) {
                return invalid(
                    "regularizer",
                    format!(
                        "{} requires regularizer = l2 with lambda_over_n > 0",
                        self.algorithm
                    ),
                );
            }
        if self.algorithm == Algorithm::Dpadmm {
            match (self.regularizer, self.schedule) {
                (RegKind::L1, Schedule::Smooth) => {
                    return invalid(
                        "schedule",
                        "the l1 regularizer needs the nonsmooth schedule".into(),
                    )
                }
                (RegKind::L2, Schedule::Nonsmooth) => {
                    return invalid(
                        "schedule",
                        "the nonsmooth schedule needs a subgradient bound, which l2 lacks; \
                         use schedule = smooth"
                            .into(),
                    )
                }
                _ => {}
            }
        }
        if self.algorithm.is_private() {
            match (self.eps, self.delta) {
                (Some(eps), Some(delta)) => {
                    crate::privacy::PrivacyBudget::new(eps, delta).map_err(|e| {
                        ConfigError::Invalid { key: "eps", message: e.to_string() }
                    })?;
                }
                _ => {
                    return invalid(
                        "eps",
                        format!("{} needs both eps and delta", self.algorithm),
                    )
                }
            }
        }
        match self.dataset {
            DatasetKind::Adult => {
                if self.adult_path.is_none() {
                    return invalid("adult_path", "required for dataset = adult".into());
                }
                if self.n_train < self.n {
                    return invalid("n_train", "must cover at least one row per agent".into());
                }
            }
            DatasetKind::Synthetic => {
                if self.m_per_agent == 0 || self.dim == 0 || self.test_size == 0 {
                    return invalid(
                        "m_per_agent",
                        "synthetic sizes must be positive".into(),
                    );
                }
            }
        }
        if self.inner_tol.is_nan() || self.inner_tol <= 0.0 || self.inner_max_iters == 0 {
            return invalid("inner_tol", "inner solver parameters must be positive".into());
        }
        if self.lr < 0.0 || self.clip.is_nan() || self.clip <= 0.0 {
            return invalid("lr", "lr must be >= 0 and clip > 0".into());
        }
        Ok(())
    }

    /// Canonical text form: every effective field, sorted, one per line.
    /// Two configs differ here exactly when some field differs.
    pub fn canonical(&self) -> String {
        let mut fields: Vec<(&str, String)> = vec![
            ("algorithm", self.algorithm.to_string()),
            ("adult_path", format!("{:?}", self.adult_path)),
            ("c_w", self.c_w.to_string()),
            ("clip", self.clip.to_string()),
            ("dataset", format!("{:?}", self.dataset)),
            ("delta", format!("{:?}", self.delta)),
            ("dim", self.dim.to_string()),
            ("eps", format!("{:?}", self.eps)),
            ("inner_max_iters", self.inner_max_iters.to_string()),
            ("inner_tol", self.inner_tol.to_string()),
            ("lambda_over_n", self.lambda_over_n.to_string()),
            ("lr", self.lr.to_string()),
            ("m_per_agent", self.m_per_agent.to_string()),
            ("n", self.n.to_string()),
            ("n_train", self.n_train.to_string()),
            ("name", self.name.clone()),
            ("noise", format!("{:?}", self.noise)),
            ("normalize", format!("{:?}", self.normalization)),
            ("out_dir", self.out_dir.display().to_string()),
            ("pretrain_c_w", self.pretrain_c_w.to_string()),
            ("regularizer", format!("{:?}", self.regularizer)),
            ("rho", self.rho.to_string()),
            ("schedule", format!("{:?}", self.schedule)),
            ("seeds", format!("{:?}", self.seeds)),
            ("separation", self.separation.to_string()),
            ("t", self.t.to_string()),
            ("test_size", self.test_size.to_string()),
        ];
        fields.sort_by_key(|(k, _)| *k);
        fields
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Short hex digest of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
algorithm = dpadmm
dataset = synthetic
regularizer = l2
n = 4
t = 10
rho = 0.1
lambda_over_n = 1e-6
eps = 0.1
delta = 1e-3
seeds = 1,2,3
out_dir = /tmp/run
";

    #[test]
    fn parses_defaults_and_explicit_values() {
        let c = ExperimentConfig::parse(BASE, "base").unwrap();
        assert_eq!(c.name, "base");
        assert_eq!(c.algorithm, Algorithm::Dpadmm);
        assert_eq!(c.schedule, Schedule::Smooth, "defaults from regularizer");
        assert_eq!(c.c_w, 89.0, "l2 default");
        assert_eq!(c.seeds, vec![1, 2, 3]);
        assert_eq!(c.inner_max_iters, 500);
        assert_eq!(c.m_per_agent, 400);
    }

    #[test]
    fn unknown_and_duplicate_keys_fail_fast() {
        let text = format!("{BASE}bogus_key = 1\n");
        assert!(matches!(
            ExperimentConfig::parse(&text, "x"),
            Err(ConfigError::UnknownKey { key, .. }) if key == "bogus_key"
        ));
        let text = format!("{BASE}t = 20\n");
        assert!(matches!(
            ExperimentConfig::parse(&text, "x"),
            Err(ConfigError::DuplicateKey { key, .. }) if key == "t"
        ));
    }

    #[test]
    fn master_seed_expands_deterministically() {
        let text = BASE.replace("seeds = 1,2,3", "master_seed = 9\nrepetitions = 4");
        let a = ExperimentConfig::parse(&text, "x").unwrap();
        let b = ExperimentConfig::parse(&text, "x").unwrap();
        assert_eq!(a.seeds.len(), 4);
        assert_eq!(a.seeds, b.seeds);
        let mut unique = a.seeds.clone();
        unique.dedup();
        assert_eq!(unique.len(), 4);
    }

    #[test]
    fn cross_field_rules() {
        // pvp with l1 is invalid.
        let text = BASE.replace("algorithm = dpadmm", "algorithm = pvp")
            .replace("regularizer = l2", "regularizer = l1");
        assert!(ExperimentConfig::parse(&text, "x").is_err());

        // dpadmm with l1 must not take the smooth schedule, and l2 has
        // no subgradient bound for the nonsmooth one.
        let text = format!(
            "{}schedule = smooth\n",
            BASE.replace("regularizer = l2", "regularizer = l1")
        );
        assert!(ExperimentConfig::parse(&text, "x").is_err());
        let text = format!("{BASE}schedule = nonsmooth\n");
        assert!(ExperimentConfig::parse(&text, "x").is_err());

        // Private algorithms need a budget.
        let text = BASE.replace("eps = 0.1\n", "");
        assert!(ExperimentConfig::parse(&text, "x").is_err());

        // Non-private admm parses without one.
        let text = BASE
            .replace("algorithm = dpadmm", "algorithm = admm")
            .replace("eps = 0.1\n", "")
            .replace("delta = 1e-3\n", "");
        assert!(ExperimentConfig::parse(&text, "x").is_ok());

        // Adult requires a path.
        let text = BASE.replace("dataset = synthetic", "dataset = adult");
        assert!(ExperimentConfig::parse(&text, "x").is_err());
    }

    #[test]
    fn hash_changes_iff_a_field_changes() {
        let a = ExperimentConfig::parse(BASE, "x").unwrap();
        let b = ExperimentConfig::parse(BASE, "x").unwrap();
        assert_eq!(a.hash(), b.hash());

        let c = ExperimentConfig::parse(&BASE.replace("rho = 0.1", "rho = 0.2"), "x").unwrap();
        assert_ne!(a.hash(), c.hash());

        // A defaulted field made explicit at its default value hashes
        // identically.
        let d = ExperimentConfig::parse(&format!("{BASE}c_w = 89\n"), "x").unwrap();
        assert_eq!(a.hash(), d.hash());

        let e = ExperimentConfig::parse(&format!("{BASE}c_w = 23\n"), "x").unwrap();
        assert_ne!(a.hash(), e.hash());
    }
}
