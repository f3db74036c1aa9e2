use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid uniform bounds: lo={lo} must be below hi={hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid Dirichlet parameters: {0}")]
    InvalidDirichlet(String),

    #[error("categorical weights are empty")]
    EmptyWeights,

    #[error("invalid categorical weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter out of prior support: {0}")]
    OutOfSupport(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("scale factors must be positive, found {0}")]
    NonPositiveScale(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("pool was built for a different model configuration: {0}")]
    ModelMismatch(String),

    #[error("malformed pool file: {0}")]
    Format(String),

    #[error("pool header declares {expected} realizations but {found} are present")]
    RowCount { expected: usize, found: usize },

    #[error("need at least 2 accepted values, found {0}")]
    TooFewValues(usize),

    #[error("accepted values have zero variance")]
    ZeroVariance,

    #[error("no defined values to average")]
    NothingToAverage,

    #[error("baseline RMSE must be positive, found {0}")]
    ZeroBaseline(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
