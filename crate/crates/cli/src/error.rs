use shockint_core::error::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    /// Ahead data or equation of state rejected while building the inputs.
    #[error("invalid input: {0}")]
    Input(Error),
    #[error("{0}")]
    Solver(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn input(e: Error) -> Self {
        Self::Input(e)
    }

    /// Process exit status: 2 no admissible interaction point, 3 the
    /// iteration failed, 4 bad configuration or environment.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver(Error::NoAdmissibleRoot | Error::AmbiguousRoot(_)) => 2,
            Self::Solver(Error::BadResolution(_) | Error::InvalidEos(_)) => 4,
            Self::Solver(_) => 3,
            Self::Config(_) | Self::Input(_) | Self::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
