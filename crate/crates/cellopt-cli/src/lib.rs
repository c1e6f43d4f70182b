//! Library half of the `cellopt` command-line tool: configuration parsing,
//! the seeded Monte Carlo experiment runner, and the CSV/CDF emitters. The
//! binary in `main.rs` is a thin argument-parsing shell over these modules,
//! which keeps every piece reachable from integration tests.

pub mod config;
pub mod experiment;
pub mod output;

use std::fmt;

/// Failure classes the binary maps onto exit codes: usage/configuration
/// problems exit 2, infeasible problem instances exit 1, and numerical
/// breakdowns inside a solver exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {err}"))
    }
}

impl From<cellopt::scenario::ScenarioError> for CliError {
    fn from(err: cellopt::scenario::ScenarioError) -> Self {
        CliError::Usage(format!("invalid scenario: {err}"))
    }
}

impl From<cellopt::singlecell::ScError> for CliError {
    fn from(err: cellopt::singlecell::ScError) -> Self {
        CliError::Usage(format!("invalid single-cell instance: {err}"))
    }
}

impl From<cellopt::linalg::LinalgError> for CliError {
    fn from(err: cellopt::linalg::LinalgError) -> Self {
        use cellopt::linalg::LinalgError::*;
        match err {
            Singular | IllConditioned { .. } | NoConvergence { .. } => {
                CliError::Numerical(err.to_string())
            }
            other => CliError::Usage(format!("invalid matrix input: {other}")),
        }
    }
}

impl From<cellopt::gp::GpError> for CliError {
    fn from(err: cellopt::gp::GpError) -> Self {
        use cellopt::gp::GpError::*;
        match err {
            Infeasible { .. } => CliError::Infeasible(err.to_string()),
            NoConvergence { .. } => CliError::Numerical(err.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<cellopt::multicell::McError> for CliError {
    fn from(err: cellopt::multicell::McError) -> Self {
        use cellopt::multicell::McError;
        match err {
            McError::Linalg(inner) => inner.into(),
            McError::Gp(inner) => inner.into(),
            McError::Scenario(inner) => inner.into(),
            other => CliError::Usage(format!("invalid multi-cell instance: {other}")),
        }
    }
}
