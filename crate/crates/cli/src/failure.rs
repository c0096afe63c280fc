//! Errors with process exit codes.

use std::fmt;

use shutoff_core::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub type Outcome<T> = Result<T, Failure>;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::NanObservation { .. }
            | Error::InvalidStateSpace(_)
            | Error::NotStochastic(_)
            | Error::EmptyPaths
            | Error::NotErgodic(_)
            | Error::Data { .. }
            | Error::Unit { .. }
            | Error::MissingColumn { .. }
            | Error::RankDeficient { .. }
            | Error::Format(_)
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_) => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
