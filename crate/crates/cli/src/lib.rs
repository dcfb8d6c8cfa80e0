//! Command-line front end: scenario files in, CSV/JSON artifacts out.

pub mod cli;
pub mod commands;
pub mod config;
pub mod plots;

use std::fmt;

/// Environment variable that overrides the output directory of a scenario.
pub const OUTPUT_ENV: &str = "PATCHFLOW_OUT";

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 2,
    Guard = 3,
    Numerical = 4,
}

impl ExitKind {
    pub fn reason(self) -> &'static str {
        match self {
            ExitKind::Config => "config_error",
            ExitKind::Guard => "guard_halt",
            ExitKind::Numerical => "numerical_failure",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:#}", self.kind.reason(), self.error)
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Tags an error with the exit status it maps to.
pub trait Classify<T> {
    fn or_exit(self, kind: ExitKind) -> Outcome<T>;

    fn config_err(self) -> Outcome<T>
    where
        Self: Sized,
    {
        self.or_exit(ExitKind::Config)
    }

    fn numeric_err(self) -> Outcome<T>
    where
        Self: Sized,
    {
        self.or_exit(ExitKind::Numerical)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn or_exit(self, kind: ExitKind) -> Outcome<T> {
        self.map_err(|e| Failure {
            kind,
            error: e.into(),
        })
    }
}
