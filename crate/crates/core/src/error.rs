use std::fmt;

/// Errors raised by mesh, kernel, discretization and solver construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidArgument(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    Construction(String),
    SingularMatrix,
    /// A time level could not be solved (Krylov exhaustion or breakdown).
    Solver {
        level: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Construction(msg) => write!(f, "construction failed: {msg}"),
            Error::SingularMatrix => write!(f, "matrix is singular to working precision"),
            Error::Solver { level, reason } => {
                write!(f, "solve failed at time level {level}: {reason}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
