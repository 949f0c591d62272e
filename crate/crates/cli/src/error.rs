use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] vpflow::Error),
    #[error("set could not be classified")]
    Unclassified,
    #[error("{count} deformation samples failed (seeds: {seeds})")]
    Alexandrov { count: usize, seeds: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Unclassified => 4,
            CliError::Alexandrov { .. } => 5,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Setup failures of the core library (bad shape parameters, grid too coarse) are
/// configuration errors rather than numerical ones.
pub fn setup(e: vpflow::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}
