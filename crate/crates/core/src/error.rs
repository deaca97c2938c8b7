use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("root finder did not converge: {0}")]
    Convergence(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("node ordering violated: {0}")]
    Ordering(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("floating-point overflow: {0}")]
    Overflow(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("index set is not downward closed: {0}")]
    Closure(String),

    #[error("coefficient is not coercive: {0}")]
    NonCoercive(String),

    #[error("solver failure at level {level}, point {point}: {reason}")]
    Solver {
        level: u32,
        point: String,
        reason: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Parameter(_) => 2,
            Error::Budget(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
