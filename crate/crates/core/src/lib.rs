//! Streaming dense-subgraph detection by incrementally maintained greedy
//! peeling.
//!
//! The crate keeps the peeling sequence of a weighted directed graph up to
//! date under edge insertions (one at a time or batched), edge deletions and
//! buffered "benign" insertions, so that the densest prefix can be read off
//! at any time without re-peeling from scratch.

pub mod bench;
pub mod engine;
pub mod enumerate;
pub mod error;
pub mod graph;
pub mod grouping;
pub mod heap;
pub mod io;
pub mod model;
pub mod oracle;
pub mod peel;
pub mod reorder;
pub mod stream;
pub mod verify;
pub mod window;

pub use engine::Engine;
pub use error::{Error, Result};
pub use graph::{DynamicGraph, EdgeEvent, EdgeEventKind, GraphDelta, VertexId};
pub use grouping::{EdgeClass, FlushPolicy};
pub use io::{parse_stream, write_report};
pub use model::{FdParams, Metric, SuspiciousnessModel};
pub use peel::{peel, DetectionResult, PeelingSequence, ReorderStats};
pub use reorder::Reorderer;
pub use stream::{replay, ReplayMode, ReplayReport, StreamEvent, UpdateStream};
