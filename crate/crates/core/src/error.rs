use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate segment: both endpoints are {0:?}")]
    DegenerateSegment([f64; 3]),

    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("user equipment list is empty")]
    NoUserEquipment,

    #[error("expected {expected} radii for {expected} user equipment, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("MCS index {0} is not in the active table")]
    UnknownMcs(u32),

    #[error("infeasible scenario: the positioning subspace contains no lattice point")]
    Infeasible,

    #[error("episode already finished after {0} steps")]
    EpisodeDone(usize),

    #[error("training batch is empty")]
    EmptyBatch,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("trace contains no recorded steps")]
    EmptyTrace,

    #[error("position {0:?} is not a lattice point of the positioning zone")]
    OffLattice([f64; 3]),

    #[error("distribution needs at least one sample")]
    EmptySamples,

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
