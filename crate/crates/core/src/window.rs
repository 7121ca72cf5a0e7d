//! Detection over time windows of a stream, moving from a baseline window to
//! a target window with batched insertions and deletion reorders instead of a
//! fresh peel whenever the two overlap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, GraphDelta, VertexId};
use crate::model::Metric;
use crate::peel::{peel, DetectionResult, PeelingSequence, ReorderStats};
use crate::reorder::Reorderer;
use crate::stream::UpdateStream;

/// Inclusive timestamp range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidConfig(format!(
                "window start {start} is after its end {end}"
            )));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// How the target window relates to the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowCase {
    Identical,
    /// No overlap: peel the target from scratch.
    Disjoint,
    /// Target contains the baseline: insertions on both sides.
    Extends,
    /// Target inside the baseline: deletions on both sides.
    Shrinks,
    /// Target starts earlier and ends earlier.
    ShiftsEarlier,
    /// Target starts later and ends later.
    ShiftsLater,
}

impl WindowCase {
    pub fn of(base: Window, target: Window) -> Self {
        if base == target {
            WindowCase::Identical
        } else if target.end < base.start || base.end < target.start {
            WindowCase::Disjoint
        } else if target.start <= base.start && base.end <= target.end {
            WindowCase::Extends
        } else if base.start <= target.start && target.end <= base.end {
            WindowCase::Shrinks
        } else if target.start < base.start {
            WindowCase::ShiftsEarlier
        } else {
            WindowCase::ShiftsLater
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredEvent {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
    pub timestamp: i64,
}

/// A stream scored once, in order, over its whole history. Every window
/// graph shares the full vertex universe, so ids are stable across windows.
#[derive(Clone, Debug)]
pub struct WindowIndex {
    universe: DynamicGraph,
    events: Vec<ScoredEvent>,
}

/// A window's graph together with its maintained sequence.
#[derive(Clone, Debug)]
pub struct WindowState {
    pub window: Window,
    pub graph: DynamicGraph,
    pub sequence: PeelingSequence,
    reorderer_stats: ReorderStats,
}

impl WindowState {
    pub fn detect(&self) -> DetectionResult {
        self.sequence.detect(self.reorderer_stats)
    }
}

impl WindowIndex {
    pub fn from_stream(stream: &UpdateStream, metric: Metric, priors: HashMap<String, f64>) -> Result<Self> {
        stream.validate()?;
        let mut engine = Engine::new(metric).with_priors(priors);
        let mut events = Vec::with_capacity(stream.len());
        for e in &stream.events {
            let c = engine.stage_edge(&e.src, &e.dst, e.weight, e.timestamp)?;
            events.push(ScoredEvent {
                src: engine.vertex(&e.src).expect("just staged"),
                dst: engine.vertex(&e.dst).expect("just staged"),
                weight: c,
                timestamp: e.timestamp,
            });
        }
        let g = engine.graph();
        let mut universe = DynamicGraph::new();
        for v in g.vertices() {
            universe.add_vertex(g.label(v), g.vertex_weight(v))?;
        }
        Ok(WindowIndex { universe, events })
    }

    pub fn events(&self) -> &[ScoredEvent] {
        &self.events
    }

    pub fn universe(&self) -> &DynamicGraph {
        &self.universe
    }

    fn in_window(&self, w: Window) -> impl Iterator<Item = &ScoredEvent> {
        self.events.iter().filter(move |e| w.contains(e.timestamp))
    }

    /// The graph of every event inside `w`, over the full vertex universe.
    pub fn window_graph(&self, w: Window) -> DynamicGraph {
        let mut g = self.universe.clone();
        for e in self.in_window(w) {
            g.add_edge(e.src, e.dst, e.weight).expect("scored edge");
        }
        g
    }

    /// Static peel of `w`.
    pub fn baseline(&self, w: Window) -> WindowState {
        let graph = self.window_graph(w);
        let (sequence, det) = peel(&graph);
        WindowState {
            window: w,
            graph,
            sequence,
            reorderer_stats: det.stats,
        }
    }

    /// Moves `state` to `target` and returns the target's detection and the
    /// case that was applied.
    pub fn detect_window(&self, state: &mut WindowState, target: Window) -> Result<(DetectionResult, WindowCase)> {
        if self.in_window(target).next().is_none() {
            return Err(Error::EmptyWindow);
        }
        let base = state.window;
        let case = WindowCase::of(base, target);
        match case {
            WindowCase::Identical => {}
            WindowCase::Disjoint => *state = self.baseline(target),
            _ => {
                let mut reorderer = Reorderer::new();
                let mut stats = ReorderStats::default();
                let mut delta = GraphDelta::new();
                for e in self.in_window(target).filter(|e| !base.contains(e.timestamp)) {
                    state.graph.add_edge(e.src, e.dst, e.weight)?;
                    delta.push_insert(e.src, e.dst, e.weight)?;
                }
                if !delta.is_empty() {
                    let s = reorderer.insert_batch_reorder(&state.graph, &mut state.sequence, &delta)?;
                    stats.absorb(&s);
                }
                for e in self.in_window(base).filter(|e| !target.contains(e.timestamp)) {
                    state.graph.delete_edge(e.src, e.dst, e.weight)?;
                    let s = reorderer.delete_edge_reorder(&state.graph, &mut state.sequence, e.src, e.dst)?;
                    stats.absorb(&s);
                }
                state.window = target;
                state.reorderer_stats = stats;
            }
        }
        Ok((state.detect(), case))
    }
}
