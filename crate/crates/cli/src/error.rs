use std::path::PathBuf;
use std::process::ExitCode;

use lgvi::Error as SolverError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Solver(#[from] SolverError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 ok, 1 I/O, 2 config, 3 integrator, 4 non-convergence,
    /// 5 singular sensitivity, 6 non-smooth point.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Solver(e) => match e {
                SolverError::NotSkew { .. } | SolverError::NotRotation { .. } | SolverError::InvalidInput(_) => 2,
                SolverError::NoConvergence { .. } | SolverError::SingularStep { .. } => 3,
                SolverError::MaxIterations { .. } | SolverError::NearPiAmbiguity { .. } => 4,
                SolverError::SingularSensitivity { .. } => 5,
                SolverError::NonSmoothPoint { .. } => 6,
            },
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
