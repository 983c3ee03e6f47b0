use thiserror::Error;

/// Errors raised by mesh handling, discretization and solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("singular system: {reason} (achieved residual {residual:.3e})")]
    SingularSystem { reason: String, residual: f64 },

    #[error("pressure mean {mean:.3e} violates the zero-mean constraint")]
    ConstraintViolation { mean: f64 },

    #[error("undefined convergence rate: {0}")]
    UndefinedRate(String),

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
