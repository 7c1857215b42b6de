use std::fmt;

use serde::Serialize;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Parse,
    Validation,
    Solver,
    Io,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFIER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

impl RunError {
    pub fn parse(message: impl Into<String>) -> Self {
        RunError {
            kind: ErrorKind::Parse,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        RunError {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        RunError {
            kind: ErrorKind::Solver,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        RunError {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    pub fn from_core_validation(e: nsdual_core::Error) -> Self {
        RunError::validation(e.to_string())
    }

    /// Errors raised while solving; malformed inputs discovered late still
    /// count as validation failures.
    pub fn from_core_solver(e: nsdual_core::Error) -> Self {
        use nsdual_core::Error::*;
        match e {
            MalformedUtility(_) | InvalidTree(_) | Arbitrage(_) | InvalidClaim(_) | InadmissibleLoss(_) => {
                RunError::validation(e.to_string())
            }
            _ => RunError::solver(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Parse => EXIT_PARSE,
            ErrorKind::Validation => EXIT_VALIDATION,
            ErrorKind::Solver | ErrorKind::Io => EXIT_SOLVER,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl std::error::Error for RunError {}
