use std::path::PathBuf;

use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(climb_core::Error),
    #[error("simulation failed: {0}")]
    Simulation(climb_core::Error),
    #[error("optimizer failed: {0}")]
    Optimizer(climb_core::Error),
    #[error("{0}")]
    PrefixTooShort(climb_core::Error),
    #[error("only {kept} trajectories survive filtering, need at least {needed}")]
    TooFewTrajectories { kept: usize, needed: usize },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Simulation(_) => 3,
            CliError::Optimizer(_) => 4,
            CliError::PrefixTooShort(_) => 5,
            CliError::TooFewTrajectories { .. } => 6,
        }
    }

    /// Errors from an optimizer run. Bad inputs keep their own category.
    pub fn optimizer(e: climb_core::Error) -> Self {
        use climb_core::Error as E;
        match e {
            E::PrefixTooShort { .. } => CliError::PrefixTooShort(e),
            E::Config { .. } | E::Parse { .. } | E::Csv(_) | E::Io(_) => CliError::Config(e),
            other => CliError::Optimizer(other),
        }
    }
}

impl From<climb_core::Error> for CliError {
    fn from(e: climb_core::Error) -> Self {
        use climb_core::Error as E;
        match e {
            E::Usage(_) | E::Config { .. } | E::Parse { .. } | E::Csv(_) | E::Io(_) => CliError::Config(e),
            E::Domain(_) | E::Envelope(_) | E::NoCrossover { .. } | E::Numerical { .. } => CliError::Simulation(e),
            E::NonFiniteObjective { .. } => CliError::Optimizer(e),
            E::PrefixTooShort { .. } => CliError::PrefixTooShort(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(climb_core::Error::Csv(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
