use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("line {line}: unknown label value `{value}`")]
    UnknownLabel { value: String, line: u64 },

    #[error("line {line}: non-numeric value `{value}` in numeric column `{column}`")]
    NonNumeric {
        column: String,
        value: String,
        line: u64,
    },

    #[error("every feature column is constant; nothing left after standardization")]
    EmptyFeatures,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("label rate {rate} leaves class {class} (size {size}) without labeled nodes")]
    LabelRateTooSmall {
        rate: f64,
        class: usize,
        size: usize,
    },

    #[error("class {0} has no labeled nodes")]
    MissingClassLabels(usize),

    #[error("node {0} has no edges after symmetrization")]
    IsolatedNode(usize),

    #[error(
        "iteration operator has spectral radius {spectral_radius:.6} >= 1 \
         (alpha1 = {alpha1}, alpha2 = {alpha2}, alpha3 = {alpha3}); refusing to iterate"
    )]
    Divergence {
        spectral_radius: f64,
        alpha1: f64,
        alpha2: f64,
        alpha3: f64,
    },

    #[error("residual became non-finite at iteration {iteration} (spectral radius estimate {spectral_radius:.6})")]
    NonFiniteResidual {
        iteration: usize,
        spectral_radius: f64,
    },

    #[error("unlabeled component {nodes:?} is disconnected from every labeled node")]
    DisconnectedComponent { nodes: Vec<usize> },

    #[error("cannot amplitude-encode a zero vector")]
    ZeroVector,

    #[error("matrix is not orthogonal (|QᵀQ - I|_F = {0:e})")]
    NotOrthogonal(f64),

    #[error("no unlabeled nodes: nothing to evaluate")]
    NothingToEvaluate,

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
