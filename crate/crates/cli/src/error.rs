use std::path::PathBuf;
use synthsel_core::aggregate::AggregateError;
use synthsel_core::data::DataError;
use synthsel_core::diffusion::DiffusionError;
use synthsel_core::simbench::SimError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Diffusion(_) => "diffusion",
            CliError::Aggregate(_) => "aggregate",
            CliError::Sim(_) => "simbench",
        }
    }

    /// Exit status per error family.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config { .. } => 3,
            CliError::Io { .. } => 4,
            _ => 1,
        }
    }

    /// One line: `error module=<m> command=<c> message=<json string>`.
    pub fn render(&self, command: &str) -> String {
        let mut text = self.to_string();
        let mut src = std::error::Error::source(self);
        while let Some(s) = src {
            let part = s.to_string();
            if !text.contains(&part) {
                text.push_str(": ");
                text.push_str(&part);
            }
            src = s.source();
        }
        let message = serde_json::to_string(&text.replace('\n', " ")).expect("string serializes");
        format!("error module={} command={command} message={message}", self.module())
    }
}
