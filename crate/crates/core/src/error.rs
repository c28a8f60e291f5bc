use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    MismatchedLengths { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kissing number is only tabulated for d <= 3 (got d = {0})")]
    KissingUnknown(usize),

    #[error("derivative order {0} exceeds the supported maximum of 3")]
    UnsupportedOrder(usize),

    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error("invalid Sobolev parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge after {panels} panels per axis (last relative change {change:e})")]
    QuadratureNotConverged { panels: usize, change: f64 },

    #[error("multi-index {0:?} is not in the moduli table")]
    UnknownMultiIndex(Vec<u32>),

    #[error("shrink factor must lie in (0, 1], got {0}")]
    InvalidShrink(f64),

    #[error("bump supports of points {0} and {1} overlap")]
    OverlappingSupports(usize, usize),

    #[error("reference moduli were built for different parameters")]
    ParamsMismatch,

    #[error("interpolant misses label {index} by {error:e}")]
    NotInterpolating { index: usize, error: f64 },

    #[error("rejection sampler exceeded its budget after {attempts} proposals")]
    RejectionBudgetExceeded { attempts: u64 },

    #[error("point lies outside the domain ball of radius {radius}")]
    OutOfDomain { radius: f64 },

    #[error("Matérn smoothness nu = {0} is not supported (use 0.5 or 1.5)")]
    UnsupportedNu(f64),

    #[error("kernel system could not be solved even with jitter {jitter:e}")]
    SolveFailed { jitter: f64 },

    #[error("unsupported distribution for this estimator: {0}")]
    UnsupportedSpec(String),

    #[error("k = {k} is outside the open interval (d/p, 1.5 d/p) = ({lo}, {hi})")]
    InvalidRange { k: u32, lo: f64, hi: f64 },

    #[error("beta = {beta} must lie in (0, d/2) = (0, {limit})")]
    InvalidBeta { beta: f64, limit: f64 },

    #[error("the exact oscillation check needs d = 1 and k = 1 (got d = {d}, k = {k})")]
    UnsupportedExactVariant { d: usize, k: u32 },

    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }
}
