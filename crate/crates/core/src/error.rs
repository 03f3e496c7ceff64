use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fractional order {0} is outside the open interval (0, 1)")]
    InvalidOrder(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("non-positive diffusion coefficient {value} sampled at {location:?}")]
    NonPositiveDiffusion { value: f64, location: Vec<f64> },

    #[error("full diffusion tensors are not supported (off-diagonal entry {value} at {location:?})")]
    AnisotropicTensor { value: f64, location: Vec<f64> },

    #[error("zero pivot in row {row} of a tridiagonal solve")]
    ZeroPivot { row: usize },

    #[error("singular matrix ({0})")]
    Singular(&'static str),

    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {relative_residual:e})")]
    PcgNotConverged { iterations: usize, relative_residual: f64 },

    /// Gauss-Newton failed to reach the step tolerance at one time level.
    #[error("Gauss-Newton did not converge at time level {level} after {iterations} iterations (residual {residual_norm:e})")]
    NewtonNotConverged {
        level: usize,
        iterations: usize,
        residual_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("requested basis dimension {requested} exceeds the available rank {available}")]
    RankExceeded { requested: usize, available: usize },

    #[error("DEIM basis columns are linearly dependent (column {column})")]
    DependentBasis { column: usize },

    #[error("Armijo line search stalled after {backtracks} backtracks")]
    LineSearchStalled { backtracks: usize },

    #[error("time index {index} out of range (trajectory holds {len} states)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed matrix file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("checksum mismatch for {path}: expected {expected:016x}, found {found:016x}")]
    ChecksumMismatch { path: PathBuf, expected: u64, found: u64 },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an iterative numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroPivot { .. }
                | Error::Singular(_)
                | Error::PcgNotConverged { .. }
                | Error::NewtonNotConverged { .. }
                | Error::DependentBasis { .. }
                | Error::LineSearchStalled { .. }
        )
    }
}
