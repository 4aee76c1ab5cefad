use std::path::PathBuf;

use crate::feasibility::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solution is infeasible ({} violation(s)): {}", .0.len(), summarize(.0))]
    Infeasible(Vec<Violation>),

    #[error("location {0} is not covered by any open facility")]
    Uncovered(usize),

    #[error("problem too large: {what} = {value} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("training diverged: {0}")]
    NonFiniteLoss(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            found,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Malformed { .. } => "malformed",
            Error::Dimension { .. } => "dimension",
            Error::Invariant(_) => "invariant",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Infeasible(_) => "infeasible",
            Error::Uncovered(_) => "uncovered",
            Error::TooLarge { .. } => "too_large",
            Error::NonFiniteLoss(_) => "non_finite_loss",
        }
    }
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
