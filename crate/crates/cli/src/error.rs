use std::path::PathBuf;

use thiserror::Error;

/// Exit status for a config or input-data problem.
pub const EXIT_SCHEMA: i32 = 2;
/// Exit status for a solver or output failure.
pub const EXIT_SOLVER: i32 = 3;
/// Exit status when a requested verification fails.
pub const EXIT_VERIFY: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Schema(String),

    /// Boundary pairs breaking the 1-Lipschitz requirement, already
    /// formatted with coordinates.
    #[error("boundary data is not 1-Lipschitz and no waiver is set")]
    NotLipschitz { pairs: Vec<String> },

    #[error(transparent)]
    Core(#[from] finsler_hj::Error),

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use finsler_hj::Error as E;
        match self {
            CliError::Schema(_) | CliError::NotLipschitz { .. } => EXIT_SCHEMA,
            CliError::Core(E::Input(_) | E::Expr(_) | E::Domain { .. } | E::NotLipschitz { .. } | E::Csv(_) | E::Io(_) | E::Json(_)) => EXIT_SCHEMA,
            CliError::Core(_) | CliError::Output { .. } => EXIT_SOLVER,
        }
    }
}

pub(crate) fn schema<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Schema(msg.into()))
}
