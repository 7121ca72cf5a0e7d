//! The detection engine: a graph, its peeling sequence and a scoring model,
//! kept consistent across insertions, deletions and grouped edges.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, GraphDelta, VertexId};
use crate::grouping::{classify, EdgeBuffer, EdgeClass, FlushPolicy, FlushReason};
use crate::model::{EdgeContext, SuspiciousnessModel};
use crate::peel::{peel, DetectionResult, PeelingSequence, ReorderStats};
use crate::reorder::Reorderer;

/// Result of [`Engine::submit_edge`].
#[derive(Clone, Debug, PartialEq)]
pub struct Submission {
    pub class: EdgeClass,
    pub flush: Option<Flush>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flush {
    pub reason: FlushReason,
    /// Buffered edges folded in by this flush.
    pub edges: usize,
    pub detection: DetectionResult,
}

#[derive(Debug)]
pub struct Engine {
    graph: DynamicGraph,
    model: Box<dyn SuspiciousnessModel>,
    priors: HashMap<String, f64>,
    seq: PeelingSequence,
    reorderer: Reorderer,
    buffer: EdgeBuffer,
    policy: FlushPolicy,
    reference: Option<f64>,
    last_stats: ReorderStats,
}

impl Engine {
    pub fn new(model: impl SuspiciousnessModel + 'static) -> Self {
        Engine {
            graph: DynamicGraph::new(),
            model: Box::new(model),
            priors: HashMap::new(),
            seq: PeelingSequence::new(),
            reorderer: Reorderer::new(),
            buffer: EdgeBuffer::new(),
            policy: FlushPolicy::default(),
            reference: None,
            last_stats: ReorderStats::default(),
        }
    }

    /// Starts from an already scored graph with a static peel.
    pub fn from_graph(graph: DynamicGraph, model: impl SuspiciousnessModel + 'static) -> Self {
        let mut e = Engine::new(model);
        e.graph = graph;
        e.rebuild();
        e
    }

    /// Priors for vertices created later, keyed by label. Unlisted vertices
    /// get prior 0.
    pub fn with_priors(mut self, priors: HashMap<String, f64>) -> Self {
        self.priors = priors;
        self
    }

    pub fn with_flush_policy(mut self, policy: FlushPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn flush_policy(&self) -> FlushPolicy {
        self.policy
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn sequence(&self) -> &PeelingSequence {
        &self.seq
    }

    pub fn model(&self) -> &dyn SuspiciousnessModel {
        self.model.as_ref()
    }

    pub fn reorderer_mut(&mut self) -> &mut Reorderer {
        &mut self.reorderer
    }

    pub fn last_stats(&self) -> ReorderStats {
        self.last_stats
    }

    /// Edges applied to the graph but not yet to the sequence.
    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.graph.vertex_id(label)
    }

    /// Current densest prefix of the maintained sequence. Buffered edges are
    /// not reflected until the next flush.
    pub fn detect(&self) -> DetectionResult {
        self.seq.detect(self.last_stats)
    }

    /// Drops the maintained sequence and peels the whole graph from scratch,
    /// absorbing anything buffered.
    pub fn rebuild(&mut self) -> DetectionResult {
        let started = Instant::now();
        let (seq, _) = peel(&self.graph);
        self.seq = seq;
        self.buffer.clear();
        self.reference = None;
        self.last_stats = ReorderStats {
            touched_vertices: self.graph.vertex_count(),
            touched_edges: self.graph.edge_count(),
            elapsed: started.elapsed(),
        };
        self.detect()
    }

    /// Looks up `label`, creating it with its scored prior if absent. New
    /// vertices are recorded as pending until the next reorder.
    pub fn ensure_vertex(&mut self, label: &str) -> Result<VertexId> {
        if let Some(v) = self.graph.vertex_id(label) {
            return Ok(v);
        }
        let next = VertexId::from(self.graph.vertex_count());
        let prior = self.priors.get(label).copied().unwrap_or(0.0);
        let a = self.model.vertex_score(next, prior)?;
        let v = self.graph.add_vertex(label, a)?;
        self.buffer.push_vertex(v);
        Ok(v)
    }

    /// Scores a new edge against the current in-degree of `dst`.
    pub fn score_edge(&self, src: VertexId, dst: VertexId, raw_weight: f64) -> Result<f64> {
        self.model.edge_score(&EdgeContext {
            src,
            dst,
            raw_weight,
            target_degree: self.graph.in_degree(dst) as u64,
        })
    }

    /// Adds a vertex and reorders immediately.
    pub fn add_vertex(&mut self, label: &str, a: f64) -> Result<ReorderStats> {
        let v = self.graph.add_vertex(label, a)?;
        self.buffer.push_vertex(v);
        self.commit()
    }

    /// Scores and applies one edge, then reorders (together with anything
    /// buffered).
    pub fn insert_edge(&mut self, src: &str, dst: &str, raw_weight: f64) -> Result<ReorderStats> {
        self.stage_edge(src, dst, raw_weight, 0)?;
        self.commit()
    }

    /// Applies an already scored edge between existing vertices and reorders.
    pub fn insert_edge_ids(&mut self, src: VertexId, dst: VertexId, c: f64) -> Result<ReorderStats> {
        self.stage_scored(src, dst, c, 0)?;
        self.commit()
    }

    /// Scores and applies every edge in order, then reorders once.
    pub fn insert_batch(&mut self, edges: &[(&str, &str, f64)]) -> Result<ReorderStats> {
        for &(s, d, w) in edges {
            self.stage_edge(s, d, w, 0)?;
        }
        self.commit()
    }

    /// Applies already scored insertions and reorders once.
    pub fn insert_batch_ids(&mut self, delta: &GraphDelta) -> Result<ReorderStats> {
        if !delta.insertions_only() {
            return Err(Error::WrongDeltaKind);
        }
        for &v in &delta.new_vertices {
            if !self.graph.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
            self.buffer.push_vertex(v);
        }
        for e in &delta.events {
            self.stage_scored(e.src, e.dst, e.weight, 0)?;
        }
        self.commit()
    }

    /// Removes `c` of suspiciousness from `(src, dst)` and reorders. Anything
    /// buffered is flushed first.
    pub fn delete_edge_ids(&mut self, src: VertexId, dst: VertexId, c: f64) -> Result<ReorderStats> {
        if !self.graph.has_edge(src, dst) {
            return Err(Error::EdgeNotFound(src, dst));
        }
        let mut stats = self.commit()?;
        self.graph.delete_edge(src, dst, c)?;
        self.absorb_deletion(src, dst, &mut stats)?;
        Ok(stats)
    }

    /// Removes the edge `(src, dst)` entirely and reorders.
    pub fn remove_edge_ids(&mut self, src: VertexId, dst: VertexId) -> Result<ReorderStats> {
        let mut stats = self.commit()?;
        self.graph.remove_edge(src, dst)?;
        self.absorb_deletion(src, dst, &mut stats)?;
        Ok(stats)
    }

    pub fn delete_edge(&mut self, src: &str, dst: &str, c: f64) -> Result<ReorderStats> {
        let s = self.lookup(src)?;
        let d = self.lookup(dst)?;
        self.delete_edge_ids(s, d, c)
    }

    fn absorb_deletion(&mut self, src: VertexId, dst: VertexId, stats: &mut ReorderStats) -> Result<()> {
        let del = self
            .reorderer
            .delete_edge_reorder(&self.graph, &mut self.seq, src, dst)?;
        stats.absorb(&del);
        self.last_stats = *stats;
        self.reference = None;
        Ok(())
    }

    fn lookup(&self, label: &str) -> Result<VertexId> {
        self.graph
            .vertex_id(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Scores and applies an edge to the graph only; the sequence catches up
    /// at the next [`Self::commit`] or flush. Returns the scored weight.
    pub fn stage_edge(&mut self, src: &str, dst: &str, raw_weight: f64, arrival: i64) -> Result<f64> {
        let (s, d, c) = self.prepare(src, dst, raw_weight)?;
        self.stage_scored(s, d, c, arrival)?;
        Ok(c)
    }

    fn prepare(&mut self, src: &str, dst: &str, raw_weight: f64) -> Result<(VertexId, VertexId, f64)> {
        if src == dst {
            let v = self.graph.vertex_id(src).unwrap_or(VertexId::from(self.graph.vertex_count()));
            return Err(Error::SelfLoopRejected(v));
        }
        let s = self.ensure_vertex(src)?;
        let d = self.ensure_vertex(dst)?;
        let c = self.score_edge(s, d, raw_weight)?;
        Ok((s, d, c))
    }

    fn stage_scored(&mut self, src: VertexId, dst: VertexId, c: f64, arrival: i64) -> Result<()> {
        self.graph.add_edge(src, dst, c)?;
        self.buffer.push(src, dst, c, arrival);
        Ok(())
    }

    /// Folds every buffered edge and pending vertex into the sequence with a
    /// single reorder.
    pub fn commit(&mut self) -> Result<ReorderStats> {
        if self.buffer.is_empty() {
            return Ok(ReorderStats::default());
        }
        let started = Instant::now();
        let mut dirty = self.buffer.delta.touched_vertices();
        dirty.extend(self.buffer.delta.new_vertices.iter().copied());
        dirty.sort_unstable();
        dirty.dedup();
        for &v in &dirty {
            if !self.seq.contains(v) {
                Reorderer::insert_vertex_seq(&self.graph, &mut self.seq, v)?;
            }
        }
        let mut stats = self
            .reorderer
            .reorder_insertions(&self.graph, &mut self.seq, &dirty)?;
        stats.elapsed = started.elapsed();
        self.buffer.clear();
        self.reference = None;
        self.last_stats = stats;
        Ok(stats)
    }

    /// Density of the last reported community, the threshold edges are
    /// classified against.
    pub fn reference_density(&mut self) -> f64 {
        if let Some(g) = self.reference {
            return g;
        }
        let g = self.seq.densest_prefix().1;
        self.reference = Some(g);
        g
    }

    /// Classifies an already scored edge against the current reference.
    pub fn classify_edge(&mut self, src: VertexId, dst: VertexId, c: f64) -> EdgeClass {
        let g = self.reference_density();
        let strength = |v: VertexId| {
            if self.graph.contains(v) {
                self.graph.strength(v)
            } else {
                0.0
            }
        };
        classify(strength(src), strength(dst), c, g)
    }

    /// Grouped insertion. Benign edges are buffered; an urgent edge, or a
    /// buffer that hits the flush policy, triggers a flush whose detection
    /// becomes the new reference.
    pub fn submit_edge(&mut self, src: &str, dst: &str, raw_weight: f64, arrival: i64) -> Result<Submission> {
        let (s, d, c) = self.prepare(src, dst, raw_weight)?;
        let class = self.classify_edge(s, d, c);
        self.stage_scored(s, d, c, arrival)?;
        let reason = match class {
            EdgeClass::Urgent => Some(FlushReason::Urgent),
            EdgeClass::Benign => self.buffer.due(&self.policy, arrival),
        };
        let flush = match reason {
            Some(r) => Some(self.flush_with(r)?),
            None => None,
        };
        Ok(Submission { class, flush })
    }

    /// Flushes the buffer. With nothing buffered this only reports the
    /// current detection.
    pub fn flush(&mut self) -> Result<Flush> {
        self.flush_with(FlushReason::Manual)
    }

    fn flush_with(&mut self, reason: FlushReason) -> Result<Flush> {
        let edges = self.buffer.len();
        if !self.buffer.is_empty() {
            self.commit()?;
        }
        let detection = self.detect();
        self.reference = Some(detection.density);
        Ok(Flush {
            reason,
            edges,
            detection,
        })
    }
}
