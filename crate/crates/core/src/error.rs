use thiserror::Error;

/// Errors raised by the linear algebra kernels, the set-function machinery and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at position {position})")]
    NotPositiveDefinite { position: usize, pivot: f64 },
    #[error("Schur complement {0:e} is not positive")]
    SchurNotPositive(f64),
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("linear coefficients have strictly mixed signs")]
    SignMixed,
    #[error("matrix is not a Stieltjes matrix")]
    NotStieltjes,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("I/O error: {0}")]
    Io(String),
    #[error("conic solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
