use teleamp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numeric(CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    /// Errors caused by the parameters themselves are configuration errors;
    /// the rest arise inside the computation.
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::DegenerateSplit(_)
            | CoreError::DegenerateCat
            | CoreError::BadLoss(_)
            | CoreError::NoFeasibleRA { .. }
            | CoreError::BadModeIndex { .. }
            | CoreError::UnsupportedPattern(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
