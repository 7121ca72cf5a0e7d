//! Edge grouping: deferring reorders for edges that cannot change the
//! current detection.
//!
//! An edge `(u, v, c)` is benign when neither endpoint, even with the whole
//! edge added to its full-graph weight, reaches the density `g(S^P)` of the
//! last reported community. Such edges are applied to the graph right away
//! but only folded into the peeling sequence at the next flush. An urgent
//! edge flushes immediately, together with everything buffered before it.

use serde::{Deserialize, Serialize};

use crate::graph::{GraphDelta, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    Benign,
    Urgent,
}

/// When to flush the buffer even if no urgent edge arrives. `None` means no
/// bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlushPolicy {
    pub max_size: Option<usize>,
    /// In the same unit as event timestamps.
    pub max_age: Option<i64>,
}

impl FlushPolicy {
    pub fn unbounded() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlushReason {
    Urgent,
    Size,
    Age,
    Manual,
}

/// `Urgent` iff `w_u(V) + c >= g` or `w_v(V) + c >= g`, where the strengths
/// are taken before the edge is applied.
pub fn classify(strength_src: f64, strength_dst: f64, c: f64, reference_density: f64) -> EdgeClass {
    if strength_src + c >= reference_density || strength_dst + c >= reference_density {
        EdgeClass::Urgent
    } else {
        EdgeClass::Benign
    }
}

/// Edges applied to the graph but not yet to the sequence.
#[derive(Clone, Debug, Default)]
pub struct EdgeBuffer {
    pub(crate) delta: GraphDelta,
    arrivals: Vec<i64>,
}

impl EdgeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty() && self.delta.new_vertices.is_empty()
    }

    pub fn oldest_arrival(&self) -> Option<i64> {
        self.arrivals.first().copied()
    }

    pub(crate) fn push(&mut self, src: VertexId, dst: VertexId, c: f64, arrival: i64) {
        self.delta.push_insert(src, dst, c).expect("scored weight is positive");
        self.arrivals.push(arrival);
    }

    pub(crate) fn push_vertex(&mut self, v: VertexId) {
        self.delta.new_vertices.push(v);
    }

    /// Whether `policy` forces a flush once an event at `now` is buffered.
    pub fn due(&self, policy: &FlushPolicy, now: i64) -> Option<FlushReason> {
        if policy.max_size.is_some_and(|m| self.len() >= m) {
            return Some(FlushReason::Size);
        }
        match (policy.max_age, self.oldest_arrival()) {
            (Some(age), Some(oldest)) if now.saturating_sub(oldest) >= age => Some(FlushReason::Age),
            _ => None,
        }
    }

    pub(crate) fn clear(&mut self) {
        self.delta.clear();
        self.arrivals.clear();
    }
}
