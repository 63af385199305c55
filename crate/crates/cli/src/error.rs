//! Command-line failures, bucketed by exit code.

use std::fmt;

/// Exit code 1: the scenario or arguments are wrong. Exit code 2: the
/// filesystem got in the way. Exit code 3: a verification suite found a
/// counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Suite,
}

impl ErrorKind {
    fn label(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Io => "io",
            ErrorKind::Suite => "suite",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, message: message.into() }
    }

    pub fn suite(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Suite, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::Suite => 3,
        }
    }

    /// Single-line JSON for stderr, so callers can parse failures.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind.label(), "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)
    }
}

impl From<recloop_core::Error> for CliError {
    fn from(e: recloop_core::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
