//! Problem files, reports and the exit-code taxonomy of the command line.

mod report;
mod spec;

pub use report::{run, sibling_trace_path, Command, Report, RunOptions, CONVENTION};
pub use spec::{load_problem, parse_problem, LoadedProblem, ProblemSpec, Q};

use crate::error::Error;

/// Exit code for input that does not match the schema.
pub const EXIT_SCHEMA: i32 = 2;
/// Exit code for input that parses but violates a mathematical condition.
pub const EXIT_VALIDATION: i32 = 3;
/// Exit code for numerical failures.
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => EXIT_SCHEMA,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Errors while building the problem: bad rationals are schema errors,
    /// everything else is a failed mathematical condition.
    pub(crate) fn from_load(e: Error) -> Self {
        match e {
            Error::ParseRational(s) => CliError::schema("<rational>", format!("cannot parse {s:?}")),
            other => CliError::Validation(other.to_string()),
        }
    }

    /// Errors from a module pipeline after loading.
    pub(crate) fn from_run(e: Error) -> Self {
        CliError::Solver(e.to_string())
    }
}
