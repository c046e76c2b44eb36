use std::path::PathBuf;

use thiserror::Error;

use crate::optimizer::DecayViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("boundary edge with midpoint ({x}, {y}) matches no tagging rule")]
    UntaggedEdge { x: f64, y: f64 },

    #[error("negative weight {value:e} at element {element}, quadrature point {point}")]
    NegativeWeight {
        element: usize,
        point: usize,
        value: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "{solver} did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("non-finite {quantity} at outer iteration {outer}, inner iteration {inner}")]
    Diverged {
        outer: usize,
        inner: usize,
        quantity: &'static str,
    },

    #[error("energy increased at {}", .0.summary())]
    EnergyIncrease(Box<DecayViolation>),

    #[error("{context}: {source}")]
    Solve {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a solver failure with iteration context.
    pub(crate) fn in_context(self, context: impl Into<String>) -> Self {
        Error::Solve {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Solve { source, .. } => source.root(),
            other => other,
        }
    }
}
