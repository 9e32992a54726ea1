use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty structure: {0}")]
    EmptyStructure(String),

    #[error("overlapping atoms {i} and {j} (zero separation)")]
    OverlappingAtoms { i: usize, j: usize },

    #[error("minimization stuck: step size underflowed below {h:.3e} nm with no accepted step")]
    StuckMinimization { h: f64 },

    #[error("non-finite value at step {step}: {message}")]
    Integration { step: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("task failed at index {index}: {message}")]
    TaskFailed { index: usize, message: String },

    #[error("measurement invalid: {0}")]
    MeasurementInvalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
