use std::path::PathBuf;

use qzeno::ZenoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ZenoError),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Configuration(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Model(e) => e.category(),
            CliError::InvalidArgument(_) => "invalid-argument",
            CliError::Configuration(_) => "configuration",
            CliError::Io { .. } => "io",
        }
    }

    /// One-line `category: message` form for stderr.
    pub fn one_line(&self) -> String {
        let msg = match self {
            CliError::Model(e) => match e {
                ZenoError::InvalidArgument(m)
                | ZenoError::Domain(m)
                | ZenoError::Configuration(m) => m.clone(),
            },
            other => other.to_string(),
        };
        format!("{}: {}", self.category(), msg.replace('\n', " "))
    }
}
