//! Run configuration: command-line flags over a TOML file over defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Keys accepted in a `--config` file. Any of them may be omitted.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub out: Option<PathBuf>,
    pub dim: Option<usize>,
    pub rank: Option<usize>,
    pub samples: Option<usize>,
    pub directions: Option<usize>,
    pub trace: Option<f64>,
    pub operators: Option<String>,
    pub a_op: Option<String>,
    pub b_op: Option<String>,
    pub lambda_re: Option<f64>,
    pub lambda_im: Option<f64>,
    pub d_min: Option<usize>,
    pub d_max: Option<usize>,
    pub nu: Option<u64>,
    pub trials: Option<usize>,
    pub theta: Option<f64>,
    pub probe: Option<String>,
    pub state: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub b_max: Option<f64>,
    pub b_steps: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub step: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values. Exit code 2.
    Validation(String),
    /// Failure while computing or writing results. Exit code 1.
    Runtime(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<finiteqp::Error> for CliError {
    fn from(e: finiteqp::Error) -> Self {
        use finiteqp::Error::*;
        match e {
            Dimension(..) | DimensionMismatch { .. } | InvalidParameter(_) | IndexOutOfRange { .. } | InfeasibleTrace { .. }
            | EmptySlice(_) | NotPure(_) | Insensitive(_) => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

/// Fails with a field-level diagnostic unless `ok`.
pub fn ensure(ok: bool, field: &str, msg: impl fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("field `{field}`: {msg}")))
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RESTARTS: usize = 64;
pub const MAX_DIM: usize = finiteqp::operators::DEFAULT_MAX_DIM;

pub fn check_dim(d: usize) -> Result<(), CliError> {
    ensure((2..=MAX_DIM).contains(&d), "dim", format!("must be in 2..={MAX_DIM}, got {d}"))
}
