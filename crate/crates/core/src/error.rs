use std::path::PathBuf;

use thiserror::Error;

use crate::graph::VertexId;

/// Errors surfaced by the engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex label `{0}` already exists")]
    DuplicateVertex(String),
    #[error("vertex {0} is not part of the graph or peeling sequence")]
    UnknownVertex(VertexId),
    #[error("unknown vertex label `{0}`")]
    UnknownLabel(String),
    #[error("self-loop on vertex {0} rejected")]
    SelfLoopRejected(VertexId),
    #[error("edge weight must be strictly positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("vertex weight must be nonnegative, got {0}")]
    NegativeVertexWeight(f64),
    #[error("edge ({0}, {1}) not found")]
    EdgeNotFound(VertexId, VertexId),
    #[error("cannot remove {requested} from edge ({src}, {dst}) holding {stored}")]
    WeightUnderflow {
        src: VertexId,
        dst: VertexId,
        stored: f64,
        requested: f64,
    },
    #[error("log(x + c) is not positive for x = {degree}, c = {c}")]
    DegenerateLog { degree: u64, c: f64 },
    #[error("prefix index {index} out of range for a sequence of {len} vertices")]
    BadPrefixIndex { index: usize, len: usize },
    #[error("batch reorder only accepts insertions")]
    WrongDeltaKind,
    #[error("edge ({0}, {1}) is still present; apply the deletion to the graph first")]
    DeletionNotApplied(VertexId, VertexId),
    #[error("timestamp {found} at event {index} precedes {previous}")]
    TimestampOrder {
        index: usize,
        previous: i64,
        found: i64,
    },
    #[error("no fraud-labeled events for the given fraudster set")]
    NoLabeledEvents,
    #[error("target window contains no edges")]
    EmptyWindow,
    #[error("exhaustive search limited to {max} vertices, got {n}")]
    InstanceTooLarge { n: usize, max: usize },
    #[error("{m} edges requested but only {max} ordered pairs exist")]
    TooManyEdges { m: usize, max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: edge weight must be strictly positive, got {weight}")]
    NonPositiveWeightAt { line: usize, weight: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error stems from bad input or configuration rather than
    /// from a broken internal invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::UnknownVertex(_)
                | Error::EdgeNotFound(_, _)
                | Error::WeightUnderflow { .. }
                | Error::BadPrefixIndex { .. }
                | Error::WrongDeltaKind
                | Error::DeletionNotApplied(_, _)
        )
    }
}
