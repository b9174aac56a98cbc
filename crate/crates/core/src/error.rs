use thiserror::Error;

/// Errors raised by the numerical routines and the document loaders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix: smallest singular value {smallest:e} vs largest {largest:e}")]
    SingularMatrix { smallest: f64, largest: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("scalar chain has length {found}, expected {expected}")]
    ChainLengthMismatch { expected: usize, found: usize },

    #[error("not a solution: relative residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotASolution { residual: f64, tolerance: f64 },

    #[error("beta_{level} is not surjective")]
    NotSurjective { level: usize },

    #[error("determinant fix-up failed at level {level}")]
    DeterminantFixupFailed { level: usize },

    #[error("leading diagonal entry is not 1 or matrix is not upper triangular")]
    NotUnitriangularLeading,

    #[error("zero diagonal entry at index {index}")]
    ZeroDiagonal { index: usize },

    #[error("root index {index} out of range for {count} roots")]
    InvalidRootIndex { index: usize, count: usize },

    #[error("invalid scalars: {0}")]
    InvalidScalars(String),

    #[error("invalid quiver: {0}")]
    InvalidQuiver(String),

    #[error("invalid gauge element: {0}")]
    InvalidGauge(String),

    #[error("matrix is not upper unitriangular")]
    NotUnipotent,

    #[error("matrix is not upper triangular")]
    NotBorel,

    #[error("scalar q_{index} has modulus {modulus}, expected 1")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("matrix is not special unitary")]
    NotUnitary,

    #[error("e must be nonzero")]
    ZeroE,

    #[error("invalid alcove point: {0}")]
    InvalidAlcove(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {field}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
