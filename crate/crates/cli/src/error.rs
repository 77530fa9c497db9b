use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(spdsim::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Invalid configuration reported by the library.
    pub fn invalid(e: spdsim::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<spdsim::Error> for CliError {
    fn from(e: spdsim::Error) -> Self {
        match e {
            spdsim::Error::Io(e) => CliError::Io(e.to_string()),
            e => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
