use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(gaplattice::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Core(e) => match e {
                gaplattice::Error::Budget { .. } | gaplattice::Error::CapExceeded(_) => 3,
                gaplattice::Error::Certification(_) => 4,
                _ => 2,
            },
        }
    }

    /// Core errors raised while reading the configuration.
    pub fn from_config(e: gaplattice::Error) -> Self {
        match e {
            gaplattice::Error::Budget { .. } => CliError::Core(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<gaplattice::Error> for CliError {
    fn from(e: gaplattice::Error) -> Self {
        CliError::Core(e)
    }
}
