//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input (dimension mismatch, unparsable id, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An iterative solver ran out of its iteration budget.
    /// Carries the best iterate found and its residual.
    #[error("convergence error: residual {residual:.3e} after {iters} iterations")]
    Convergence {
        /// Best iterate found before giving up.
        best: Vec<f64>,
        /// Residual of the best iterate (solver-specific units).
        residual: f64,
        /// Iterations spent.
        iters: usize,
    },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation is not supported for the given problem.
    #[error("capability error: {0}")]
    Capability(String),

    /// A numerical routine failed (e.g. eigenvalue iteration stalled).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A runtime certificate was violated beyond its slack; this signals an
    /// implementation bug or deliberately corrupted data, not bad luck.
    #[error("certificate violation: {0}")]
    Certificate(String),

    /// A trajectory run aborted mid-way; the partial record is attached.
    #[error("run aborted after {iters} iterations: {source}")]
    RunAborted {
        /// Iterations completed before the abort.
        iters: usize,
        /// Underlying failure.
        source: Box<Error>,
    },

    /// I/O failure while reading configs or writing reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable kind tag, used by the CLI error channel.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Parameter(_) => "parameter",
            Error::Convergence { .. } => "convergence",
            Error::Precondition(_) => "precondition",
            Error::Capability(_) => "capability",
            Error::Numerical(_) => "numerical",
            Error::Certificate(_) => "certificate",
            Error::RunAborted { .. } => "run_aborted",
            Error::Io(_) => "io",
        }
    }
}
