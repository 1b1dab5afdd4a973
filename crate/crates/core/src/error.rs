use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Read-enable assignment not allowed by the operating mode, or an operation that
    /// would mix read and write paths.
    #[error("mode violation: {0}")]
    ModeViolation(String),

    #[error("read disturb: input of {volts} V exceeds the {limit} V sub-threshold read limit")]
    ReadDisturb { volts: f64, limit: f64 },

    #[error("singular nodal system: node `{node}` has no conductive path to a driven or grounded node")]
    FloatingNode { node: String },

    #[error("singular nodal system: non-positive pivot at node `{node}`")]
    Singular { node: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
