use serde::Serialize;
use std::path::Path;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Rejected configuration, with the dotted key at fault.
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] adsrc_core::Error),

    /// Everything ran but a certificate did not hold.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Core(_) => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_VALIDATION => "validation",
            EXIT_NUMERICAL => "numerical",
            _ => "verification",
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Config { key, .. } => Some(key),
            _ => None,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(adsrc_core::Error::Csv(e))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(adsrc_core::Error::Io(e))
    }
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    command: &'a str,
    kind: &'a str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<&'a str>,
    message: String,
}

/// Machine-readable failure record, `error.json` in `dir`.
pub fn write_error(dir: &Path, command: &str, err: &CliError) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let report = ErrorReport {
        command,
        kind: err.kind(),
        exit_code: err.exit_code(),
        key: err.key(),
        message: err.to_string(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("plain struct");
    text.push('\n');
    std::fs::write(dir.join("error.json"), text)
}
