//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed edge-list input; carries the 1-based line number.
    #[error("edge list parse error at line {line}: {msg}")]
    EdgeListParse { line: usize, msg: String },

    /// Edge list contained no usable edges (after dropping self-loops).
    #[error("edge list produced an empty graph")]
    EmptyGraph,

    /// A parameter fell outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A run configuration failed cross-field validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A feasibility condition for the switching controller does not hold.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Artifact files on disk were inconsistent or unreadable as data.
    #[error("artifact error in {path}: {msg}")]
    Artifact { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/validation
    /// problems, 3 for numerical infeasibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 3,
            _ => 2,
        }
    }

    /// Stable machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EdgeListParse { .. } => "parse",
            Error::EmptyGraph => "empty_graph",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Infeasible(_) => "infeasible",
            Error::Artifact { .. } => "artifact",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
