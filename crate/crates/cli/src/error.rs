use std::io;

use serde_json::json;

/// Everything the command line can fail with, mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qcavity_core::Error),
    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Tolerance(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2: bad input, 3: numerical failure, 4: tolerance failure, 1: I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Json(_) => 2,
            CliError::Core(
                qcavity_core::Error::Config(_) | qcavity_core::Error::MethodValidity(_),
            ) => 2,
            CliError::Core(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            4 => "tolerance",
            _ => "io",
        }
    }

    /// Single-line machine-readable form for stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() } })
            .to_string()
    }
}
