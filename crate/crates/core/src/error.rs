use thiserror::Error;

/// Every failure the library reports. Variants map onto the error classes of
/// the individual operations so callers can match on the kind of failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("extension error: collar divergence {divergence:.3e} below tolerance at cell {cell}")]
    Extension { cell: usize, divergence: f64 },

    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),

    #[error("hypothesis violated: {message} (witness rho = {witness})")]
    Hypothesis { message: String, witness: f64 },

    #[error("linear solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("scheme violation: {0}")]
    Scheme(String),

    #[error("coupling error: density {rho:.6e} below envelope floor {floor:.6e} at cell {cell}")]
    Coupling { cell: usize, rho: f64, floor: f64 },

    #[error("step-size error: {0}")]
    StepSize(String),

    #[error("ineligible test pair: {0}")]
    IneligiblePair(String),

    #[error("test configuration error: {0}")]
    TestField(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("at step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep { step, source: Box::new(self) }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
