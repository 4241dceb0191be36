use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Solver(fairhorizon::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Solver(_) => 1,
        }
    }
}

impl From<fairhorizon::Error> for CliError {
    fn from(e: fairhorizon::Error) -> Self {
        use fairhorizon::Error as E;
        match e {
            E::PricingInfeasible | E::Infeasible(_) => CliError::Infeasible(e.to_string()),
            E::OracleTooLarge { .. } | E::StateBudget { .. } | E::IterationCap { .. } => {
                CliError::Budget(e.to_string())
            }
            E::InvalidInstance(_) | E::Generation(_) | E::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
