use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value violates a precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Recorded mode would exceed the configured event cap.
    #[error("event cap exceeded: more than {cap} events recorded before t = {time}")]
    EventCap { cap: usize, time: f64 },

    /// The dual process only exists for logs without kill arrows.
    #[error("event log contains kill arrows; the dual process requires gamma = 0")]
    KillArrowsInLog,

    #[error("pair state ({0}, {1}) is outside the closed set of the grass-bush-tree coupling")]
    OutsideClosedSet(u8, u8),

    #[error("point ({0}, {1}) is on the boundary of the simplex")]
    BoundaryPoint(f64, f64),

    /// A requested allocation is larger than the configured limit.
    #[error("{what} needs {size} cells, limit is {cap}")]
    SizeCap { what: &'static str, size: usize, cap: usize },

    #[error("integration failed at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
