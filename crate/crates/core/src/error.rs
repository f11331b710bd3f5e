use thiserror::Error;

/// Errors raised while building states, operations and analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}; only 2 (qubit) and 4 (qubit pair) are supported")]
    UnsupportedDimension(usize),

    #[error("ket is not normalized (norm = {0:e})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),

    #[error("negative eigenvalue {0}")]
    NegativeEigenvalue(f64),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("undefined action: {0}")]
    UndefinedAction(String),

    #[error("experiments are not reorderings of each other: {0}")]
    StepMismatch(String),

    #[error("correlation table is not quantum: {0}")]
    NonQuantumTable(String),

    #[error("invalid correlation table: {0}")]
    InvalidTable(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

pub type Result<T> = std::result::Result<T, Error>;
