use thiserror::Error;

/// Errors surfaced by the library and mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model data: dimension mismatches, non-finite coefficients,
    /// dangling references. The message carries the offending field path.
    #[error("invalid model: {0}")]
    Validation(String),

    /// A file could not be parsed (JSON schema violation, bad CSV cell).
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// Underlying I/O failure with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A time-step LP turned out infeasible; `farkas_row` is a constraint row
    /// witnessing the infeasibility.
    #[error("time step {t} is infeasible (certificate row {farkas_row})")]
    InfeasibleTimestep { t: usize, farkas_row: usize },

    /// A time-step LP is unbounded below.
    #[error("time step {t} is unbounded")]
    UnboundedTimestep { t: usize },

    /// The simplex pivot guard tripped; the solve did not converge.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Exhaustive partition enumeration refused: too many bases.
    #[error("exhaustive search over {bases} bases exceeds the cap of {cap} (set a higher cap to force it)")]
    CapExceeded { bases: usize, cap: usize },

    /// A metric is undefined for the given inputs (zero denominator).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// An operation was called with inputs violating its contract
    /// (e.g. duals requested from a non-optimal solution).
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable exit-code category for the CLI (0 is success, 2 is usage).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } => 3,
            Error::InfeasibleTimestep { .. }
            | Error::UnboundedTimestep { .. }
            | Error::SolverFailure(_) => 4,
            Error::CapExceeded { .. } => 5,
            Error::UndefinedMetric(_) | Error::Contract(_) => 6,
            Error::Io { .. } => 1,
        }
    }
}
