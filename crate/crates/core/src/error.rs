use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solvers, estimators and loaders in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("observation for phenomenon `{phenomenon}` is NaN")]
    NanObservation { phenomenon: String },

    #[error("expected {expected} observations, got {got}")]
    ObservationArity { expected: usize, got: usize },

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("state {state} out of range for a space of {cardinality} states")]
    StateOutOfRange { state: usize, cardinality: usize },

    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("no paths supplied for transition estimation")]
    EmptyPaths,

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate parameter `{name}` ({value}); the threshold form needs it strictly positive")]
    DegenerateParameter { name: &'static str, value: f64 },

    #[error("budget {budget} exceeds horizon {horizon}")]
    BudgetExceedsHorizon { budget: usize, horizon: usize },

    #[error("horizon mismatch: table covers {table} days, schedule covers {schedule}")]
    HorizonMismatch { table: usize, schedule: usize },

    #[error("instance too large for exhaustive oracle: {0}")]
    ScaleGuard(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("policy called an event with no budget left on day {day}")]
    BudgetViolation { day: usize },

    #[error("{path}: row {row}: {reason}")]
    Data {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{path}: column `{column}` declared in unit `{expected}`, file has `{found}`")]
    Unit {
        path: PathBuf,
        column: String,
        expected: String,
        found: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("regression design is rank deficient (rank {rank} < {columns} columns); try fewer bins or features")]
    RankDeficient { rank: usize, columns: usize },

    #[error("artifact format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
