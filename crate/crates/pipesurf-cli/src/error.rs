//! Process-level error classes. Exit codes are part of the interface:
//! 1 configuration or IO, 2 geometry validity, 3 solver breakdown.

use crate::expr::ExprError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("validity error: {0}")]
    Validity(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Validity(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<pipesurf::Error> for CliError {
    fn from(e: pipesurf::Error) -> Self {
        use pipesurf::Error as E;
        match e {
            E::SolverBreakdown(_) => CliError::Solver(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::UnknownKind(_) | E::InvalidParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Validity(e.to_string()),
        }
    }
}

impl From<ExprError> for CliError {
    fn from(e: ExprError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
