use ashlab_core::LabError;

/// Failure classes mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or a request outside the supported envelope (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// A run that could not complete (exit 1).
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn from_lab(e: LabError) -> Self {
        match e {
            LabError::InvalidGrid(_)
            | LabError::InvalidParameter(_)
            | LabError::GridMismatch(_)
            | LabError::FamilyPrecondition { .. }
            | LabError::IncommensurateGauge { .. }
            | LabError::Budget(_) => CliError::Config(e.to_string()),
            LabError::Unstable { .. } | LabError::Defect(_) | LabError::Io(_) | LabError::Json(_) => CliError::Failure(e.to_string()),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o: {e}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::from_lab(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
