use thiserror::Error;

/// Errors raised by geometry, energy, solver and certificate routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("vector field does not vanish near the domain boundary (|xi| = {magnitude:e} at {at:?})")]
    SupportViolation { magnitude: f64, at: [f64; 2] },

    #[error("brute force limited to {limit} free cells, instance has {cells}")]
    CapacityExceeded { cells: usize, limit: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("max-flow duality check failed: flow {flow:e} vs cut {cut:e}")]
    Duality { flow: f64, cut: f64 },

    #[error("energy increased during {step}: {before:e} -> {after:e}")]
    Monotonicity {
        step: String,
        before: f64,
        after: f64,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
