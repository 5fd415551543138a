use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised across the toolkit.
///
/// Variants map onto the failure classes surfaced by the command-line tool
/// (usage/input, numerical, convergence, divergence).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions do not line up.
    Shape {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A hyperparameter or configuration value is out of range.
    Parameter(String),
    /// Input data is malformed (non-finite values, bad labels, empty sets).
    Input(String),
    /// A factorization or solve broke down.
    Numerical(String),
    /// An iterative solver hit its iteration cap.
    Convergence { iterations: usize, residual: f64 },
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, batch: usize, loss: f64 },
    /// API misuse, e.g. a stale forward cache passed to backward.
    Usage(String),
    /// A split protocol cannot be built from the supplied data.
    Protocol(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, expected, found } => write!(
                f,
                "shape error in {op}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Input(msg) => write!(f, "input error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Convergence { iterations, residual } => write!(
                f,
                "solver did not converge after {iterations} iterations (KKT residual {residual:e})"
            ),
            Error::Divergence { epoch, batch, loss } => {
                write!(f, "training diverged at epoch {epoch}, batch {batch} (loss {loss})")
            }
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
