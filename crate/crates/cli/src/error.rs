use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<qmap_enm::Error> for CliError {
    fn from(e: qmap_enm::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
