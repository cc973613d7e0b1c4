use thiserror::Error;

/// Errors produced by the solver library.
///
/// The CLI maps these onto exit codes: configuration, domain and
/// validation problems exit with 1; runtime failures (divergence,
/// infeasible topology, I/O) exit with 2.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs have inconsistent shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value or config file is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A convergence condition on the schedules or the consensus weight
    /// is violated; the message names the failed inequality.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A design matrix has a zero column, so the per-coordinate steps
    /// are ill-posed.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Random geometric placement could not satisfy the requested
    /// degree/connectivity constraints within the resample budget.
    #[error("infeasible topology after {attempts} attempts: last violated constraint: {constraint}")]
    InfeasibleTopology { attempts: usize, constraint: String },

    /// A nonfinite value appeared during iteration.
    #[error("divergence at iteration {iteration}: {context}")]
    Divergence { iteration: usize, context: String },

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Dimension(_)
            | Error::Config(_)
            | Error::Validation(_)
            | Error::DegenerateData(_)
            | Error::Parse(_) => 1,
            Error::InfeasibleTopology { .. } | Error::Divergence { .. } | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
