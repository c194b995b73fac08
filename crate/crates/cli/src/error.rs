use thiserror::Error;

/// Exit code 1: the input was read but failed validation or a verdict.
pub const EXIT_DOMAIN: u8 = 1;
/// Exit code 2: I/O or parse failure.
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<pfsic_core::Error> for CliError {
    fn from(e: pfsic_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(format!("parse error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
