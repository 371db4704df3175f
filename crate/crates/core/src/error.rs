//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unit impact normalization violated for shock {shock}: impact response is {value}, expected 1")]
    NormalizationViolation { shock: usize, value: f64 },

    #[error("conditioning event has probability zero")]
    UndefinedEvent,

    #[error("instrument loads on shock {shock}, which is outside the composite set")]
    ExogeneityViolation { shock: usize },

    #[error("denominator too small: |{value:.6e}| against scale {scale:.6e}")]
    WeakDenominator { value: f64, scale: f64 },

    #[error("rank condition failed: singular value ratio {ratio:.3e} below threshold {threshold:.3e}")]
    RankCondition { ratio: f64, threshold: f64 },

    #[error("under-identified: {instruments} instruments for {unknowns} unknowns")]
    UnderIdentified { instruments: usize, unknowns: usize },

    #[error("collinear regressor matrix; dependent columns: {}", columns.join(", "))]
    Collinearity { columns: Vec<String> },

    #[error("insufficient sample: need more than {required} usable observations, have {available}")]
    InsufficientSample { required: usize, available: usize },

    #[error("weighting matrix not usable: {0}")]
    Weighting(String),

    #[error("cumulative response of sector {sector} is zero; component multiplier undefined")]
    ZeroCumulativeResponse { sector: usize },

    #[error("counterfactual is not identified: the first covariance coefficient is zero")]
    NotIdentifiedFromLine,

    #[error("degenerate covariance line: both covariance coefficients are zero")]
    DegenerateLine,

    #[error("optimizer failed to converge after {iterations} iterations; criterion trace {trace:?}")]
    Convergence { iterations: usize, trace: Vec<f64> },

    #[error("impact matrix became singular during optimization")]
    SingularPsi,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("replication {index} failed: {source}")]
    ReplicationFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
