use std::fmt;

use serde::Serialize;

/// Process exit codes.
pub mod exit {
    pub const ROBUST: u8 = 0;
    pub const STATIONARY: u8 = 1;
    pub const NOT_STATIONARY: u8 = 2;
    pub const THRESHOLD_MISSED: u8 = 3;
    pub const CONFIG: u8 = 64;
    pub const INTERNAL: u8 = 70;
    pub const IO: u8 = 74;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Config,
    Precondition,
    Run,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage | ErrorKind::Config | ErrorKind::Precondition => exit::CONFIG,
            ErrorKind::Run => exit::INTERNAL,
            ErrorKind::Io => exit::IO,
        }
    }
}

/// A failure with a machine-readable kind and, for configuration problems,
/// the dotted path of the offending key.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub key: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, key: Option<&str>, message: impl fmt::Display) -> Self {
        Self {
            kind,
            key: key.map(str::to_owned),
            message: message.to_string(),
        }
    }

    pub fn config(key: &str, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Config, Some(key), message)
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Io, None, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }

    /// Maps a library error raised while handling `key`.
    pub fn from_core(key: &str, err: robust_eq_core::Error) -> Self {
        use robust_eq_core::Error as E;
        let kind = match err {
            E::NotApplicable(_) => ErrorKind::Precondition,
            E::Lp(_) | E::Analysis(_) | E::Schedule { .. } => ErrorKind::Run,
            _ => ErrorKind::Config,
        };
        Self::new(kind, Some(key), err)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
