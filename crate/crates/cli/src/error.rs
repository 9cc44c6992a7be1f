use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const GENERAL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INVARIANT: i32 = 3;
    pub const RESOURCE: i32 = 4;
    pub const IO: i32 = 5;
    pub const ACCEPTANCE: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("resource cap: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Invariant(_) => exit::INVARIANT,
            CliError::Resource(_) => exit::RESOURCE,
            CliError::Io(_) => exit::IO,
            CliError::Other(_) => exit::GENERAL,
        }
    }
}

impl From<allelo_core::Error> for CliError {
    fn from(e: allelo_core::Error) -> Self {
        use allelo_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::KillArrowsInLog | E::BoundaryPoint(..) => CliError::Config(msg),
            E::EventCap { .. } | E::SizeCap { .. } => CliError::Resource(msg),
            E::OutsideClosedSet(..) | E::StepFailure { .. } => CliError::Invariant(msg),
        }
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<rayon::ThreadPoolBuildError> for CliError {
    fn from(e: rayon::ThreadPoolBuildError) -> Self {
        CliError::Resource(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
