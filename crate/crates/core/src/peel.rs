//! Static greedy peeling and the peeling-sequence state it produces.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, VertexId};
use crate::heap::PendingQueue;

const ABSENT: u32 = u32::MAX;

/// Relative slack used when comparing prefix densities for the argmax.
pub const DENSITY_TIE_TOLERANCE: f64 = 1e-9;

/// Removal order `O` together with the peeling weight `Δ` of each removal.
///
/// Stored tail-first so that prepending a new vertex is O(1) and positions of
/// existing vertices are recoverable from a stable slot index.
#[derive(Clone, Debug, Default)]
pub struct PeelingSequence {
    rev_order: Vec<VertexId>,
    rev_delta: Vec<f64>,
    slot: Vec<u32>,
    f0: f64,
}

impl PeelingSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sequence from a head-first order and matching weights.
    pub fn from_parts(order: &[VertexId], delta: &[f64], f0: f64) -> Self {
        assert_eq!(order.len(), delta.len());
        let mut seq = PeelingSequence {
            rev_order: order.iter().rev().copied().collect(),
            rev_delta: delta.iter().rev().copied().collect(),
            slot: Vec::new(),
            f0,
        };
        for (r, &v) in seq.rev_order.iter().enumerate() {
            if seq.slot.len() <= v.index() {
                seq.slot.resize(v.index() + 1, ABSENT);
            }
            seq.slot[v.index()] = r as u32;
        }
        seq
    }

    pub fn len(&self) -> usize {
        self.rev_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rev_order.is_empty()
    }

    /// `f(S_0)` as of the last reorder.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub(crate) fn set_f0(&mut self, f0: f64) {
        self.f0 = f0;
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.slot.get(v.index()).is_some_and(|&s| s != ABSENT)
    }

    /// Head-first position of `v`.
    pub fn position(&self, v: VertexId) -> Option<usize> {
        let s = *self.slot.get(v.index())?;
        (s != ABSENT).then(|| self.rev_order.len() - 1 - s as usize)
    }

    #[inline]
    pub fn vertex_at(&self, p: usize) -> VertexId {
        self.rev_order[self.rev_order.len() - 1 - p]
    }

    #[inline]
    pub fn delta_at(&self, p: usize) -> f64 {
        self.rev_delta[self.rev_delta.len() - 1 - p]
    }

    /// Head-first iterator over `(vertex, Δ)`.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (VertexId, f64)> + '_ {
        self.rev_order
            .iter()
            .copied()
            .zip(self.rev_delta.iter().copied())
            .rev()
    }

    pub fn order(&self) -> Vec<VertexId> {
        self.rev_order.iter().rev().copied().collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.rev_delta.iter().rev().copied().collect()
    }

    /// Puts `v` at the head of the sequence with peeling weight `delta`.
    pub fn prepend(&mut self, v: VertexId, delta: f64) -> Result<()> {
        if self.contains(v) {
            return Err(Error::DuplicateVertex(v.to_string()));
        }
        if self.slot.len() <= v.index() {
            self.slot.resize(v.index() + 1, ABSENT);
        }
        self.slot[v.index()] = self.rev_order.len() as u32;
        self.rev_order.push(v);
        self.rev_delta.push(delta);
        self.f0 += delta;
        Ok(())
    }

    /// Overwrites positions `start..start + entries.len()` head-first.
    pub(crate) fn write_range(&mut self, start: usize, entries: &[(VertexId, f64)]) {
        let n = self.rev_order.len();
        for (offset, &(v, d)) in entries.iter().enumerate() {
            let r = n - 1 - (start + offset);
            self.rev_order[r] = v;
            self.rev_delta[r] = d;
            self.slot[v.index()] = r as u32;
        }
    }

    /// `f(S_i) = f(S_0) - Σ_{m<i} Δ_m` for every `i` in `0..=len`.
    pub fn prefix_suspiciousness(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut f = self.f0;
        out.push(f);
        for (_, d) in self.iter() {
            f -= d;
            out.push(f);
        }
        out
    }

    /// Density of `S_i`, the set left after `i` removals. Zero for the empty set.
    pub fn density_of_prefix(&self, i: usize) -> Result<f64> {
        let n = self.len();
        if i > n {
            return Err(Error::BadPrefixIndex { index: i, len: n });
        }
        if i == n {
            return Ok(0.0);
        }
        let removed: f64 = self.iter().take(i).map(|(_, d)| d).sum();
        Ok((self.f0 - removed) / (n - i) as f64)
    }

    /// Densities of every `S_i`, `i` in `0..=len`.
    pub fn prefix_densities(&self) -> Vec<f64> {
        let n = self.len();
        self.prefix_suspiciousness()
            .into_iter()
            .enumerate()
            .map(|(i, f)| if i == n { 0.0 } else { f / (n - i) as f64 })
            .collect()
    }

    /// Index and density of the densest `S_i`; ties go to the smallest index.
    pub fn densest_prefix(&self) -> (usize, f64) {
        let n = self.len();
        if n == 0 {
            return (0, 0.0);
        }
        let mut best = (0, self.f0 / n as f64);
        let mut f = self.f0;
        for (i, (_, d)) in self.iter().enumerate().take(n - 1) {
            f -= d;
            let density = f / (n - i - 1) as f64;
            if density > best.1 + DENSITY_TIE_TOLERANCE * best.1.abs().max(1.0) {
                best = (i + 1, density);
            }
        }
        best
    }

    /// The densest prefix as a detection result.
    pub fn detect(&self, stats: ReorderStats) -> DetectionResult {
        let (prefix_index, density) = self.densest_prefix();
        let mut community: Vec<VertexId> = (prefix_index..self.len())
            .map(|p| self.vertex_at(p))
            .collect();
        community.sort_unstable();
        DetectionResult {
            community,
            density,
            prefix_index,
            stats,
        }
    }

    /// Structural self-check: slot table consistency, `Σ Δ = f0`, signs.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (r, &v) in self.rev_order.iter().enumerate() {
            if self.slot.get(v.index()).copied() != Some(r as u32) {
                return Err(format!("slot of vertex {v} is stale"));
            }
        }
        let live = self.slot.iter().filter(|&&s| s != ABSENT).count();
        if live != self.len() {
            return Err(format!("{live} slots for {} vertices", self.len()));
        }
        if let Some(d) = self.rev_delta.iter().find(|d| !(**d >= -1e-9)) {
            return Err(format!("negative peeling weight {d}"));
        }
        let sum: f64 = self.rev_delta.iter().sum();
        if (sum - self.f0).abs() > 1e-9 * self.f0.abs().max(1.0) {
            return Err(format!("Σ Δ = {sum} but f(S_0) = {}", self.f0));
        }
        Ok(())
    }
}

/// Size and cost of the part of the graph a reorder had to inspect.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReorderStats {
    /// Vertices that entered the pending queue.
    pub touched_vertices: usize,
    /// Distinct edges incident to a touched vertex.
    pub touched_edges: usize,
    #[serde(rename = "elapsed_us", with = "duration_us")]
    pub elapsed: Duration,
}

impl ReorderStats {
    pub fn absorb(&mut self, other: &ReorderStats) {
        self.touched_vertices += other.touched_vertices;
        self.touched_edges += other.touched_edges;
        self.elapsed += other.elapsed;
    }
}

pub(crate) mod duration_us {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_nanos() as f64 / 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let us = f64::deserialize(d)?;
        Ok(Duration::from_nanos((us * 1000.0).round().max(0.0) as u64))
    }
}

/// Densest prefix `S^P` of a peeling sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Members of `S^P`, ascending by id.
    pub community: Vec<VertexId>,
    pub density: f64,
    pub prefix_index: usize,
    pub stats: ReorderStats,
}

impl DetectionResult {
    pub fn empty() -> Self {
        DetectionResult {
            community: Vec::new(),
            density: 0.0,
            prefix_index: 0,
            stats: ReorderStats::default(),
        }
    }
}

/// `w_u(S)`: the drop in `f` when `u` leaves `S = {v : in_set(v)}`.
pub fn peeling_weight(graph: &DynamicGraph, u: VertexId, in_set: impl Fn(VertexId) -> bool) -> f64 {
    graph.vertex_weight(u)
        + graph
            .incident(u)
            .filter(|&(x, _)| in_set(x))
            .map(|(_, c)| c)
            .sum::<f64>()
}

/// Output of [`peel_counted`].
#[derive(Clone, Debug)]
pub struct PeelRun {
    pub sequence: PeelingSequence,
    pub detection: DetectionResult,
    /// Heap insertions plus key updates.
    pub heap_operations: u64,
}

/// Runs the greedy peel from scratch: repeatedly removes the vertex with the
/// smallest `(w_u(S), id)`.
pub fn peel(graph: &DynamicGraph) -> (PeelingSequence, DetectionResult) {
    let run = peel_counted(graph);
    (run.sequence, run.detection)
}

pub fn peel_counted(graph: &DynamicGraph) -> PeelRun {
    let started = Instant::now();
    let n = graph.vertex_count();
    let mut queue = PendingQueue::with_capacity(n);
    for v in graph.vertices() {
        queue.push(v, graph.strength(v));
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    while let Some((u, w)) = queue.pop() {
        removed[u.index()] = true;
        order.push(u);
        delta.push(w);
        for (x, c) in graph.incident(u) {
            if !removed[x.index()] {
                queue.decrease_by(x, c);
            }
        }
    }
    let sequence = PeelingSequence::from_parts(&order, &delta, graph.total_suspiciousness());
    let stats = ReorderStats {
        touched_vertices: n,
        touched_edges: graph.edge_count(),
        elapsed: started.elapsed(),
    };
    let detection = sequence.detect(stats);
    PeelRun {
        sequence,
        detection,
        heap_operations: queue.operations(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn path(n: usize) -> DynamicGraph {
        let mut g = DynamicGraph::with_vertices(n);
        for i in 0..n - 1 {
            g.add_edge(VertexId::from(i), VertexId::from(i + 1), 1.0).unwrap();
        }
        g
    }

    #[test]
    fn peeling_weight_examples() {
        let mut g = DynamicGraph::new();
        let u = g.add_vertex("u", 0.3).unwrap();
        assert_eq!(peeling_weight(&g, u, |_| true), 0.3);

        let g = path(3);
        assert_eq!(peeling_weight(&g, v(1), |_| true), 2.0);
        assert_eq!(peeling_weight(&g, v(0), |_| true), 1.0);
        assert_eq!(peeling_weight(&g, v(1), |x| x != v(0)), 1.0);
    }

    #[test]
    fn single_edge() {
        let mut g = DynamicGraph::with_vertices(2);
        g.add_edge(v(0), v(1), 1.0).unwrap();
        let (seq, det) = peel(&g);
        assert_eq!(seq.order(), vec![v(0), v(1)]);
        assert_eq!(seq.deltas(), vec![1.0, 0.0]);
        assert_eq!(seq.prefix_densities(), vec![0.5, 0.0, 0.0]);
        assert_eq!(det.community, vec![v(0), v(1)]);
        assert_eq!(det.density, 0.5);
    }

    #[test]
    fn unit_triangle_is_densest_whole() {
        let mut g = DynamicGraph::with_vertices(3);
        g.add_edge(v(0), v(1), 1.0).unwrap();
        g.add_edge(v(1), v(2), 1.0).unwrap();
        g.add_edge(v(2), v(0), 1.0).unwrap();
        let (_, det) = peel(&g);
        assert_eq!(det.community.len(), 3);
        assert_eq!(det.density, 1.0);
    }

    #[test]
    fn path_of_four() {
        let (seq, det) = peel(&path(4));
        assert_eq!(seq.order(), vec![v(0), v(1), v(2), v(3)]);
        assert_eq!(seq.deltas(), vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(det.prefix_index, 0);
        assert_eq!(det.density, 0.75);
        assert_eq!(seq.density_of_prefix(0).unwrap(), 0.75);
        assert_eq!(seq.density_of_prefix(1).unwrap(), 2.0 / 3.0);
        assert_eq!(seq.density_of_prefix(4).unwrap(), 0.0);
        assert!(matches!(
            seq.density_of_prefix(5),
            Err(Error::BadPrefixIndex { index: 5, len: 4 })
        ));
    }

    #[test]
    fn empty_graph() {
        let (seq, det) = peel(&DynamicGraph::new());
        assert!(seq.is_empty());
        assert!(det.community.is_empty());
        assert_eq!((det.density, det.prefix_index), (0.0, 0));
    }

    #[test]
    fn densest_tie_prefers_larger_set() {
        // Two disjoint unit triangles: S_0 and S_3 both have density 1.
        let mut g = DynamicGraph::with_vertices(6);
        for base in [0u32, 3] {
            g.add_edge(v(base), v(base + 1), 1.0).unwrap();
            g.add_edge(v(base + 1), v(base + 2), 1.0).unwrap();
            g.add_edge(v(base + 2), v(base), 1.0).unwrap();
        }
        let (_, det) = peel(&g);
        assert_eq!(det.prefix_index, 0);
        assert_eq!(det.community.len(), 6);
    }

    #[test]
    fn prepend_and_positions() {
        let mut seq = PeelingSequence::from_parts(&[v(4), v(7)], &[1.0, 0.0], 1.0);
        seq.prepend(v(2), 0.5).unwrap();
        assert_eq!(seq.order(), vec![v(2), v(4), v(7)]);
        assert_eq!(seq.position(v(7)), Some(2));
        assert_eq!(seq.position(v(3)), None);
        assert_eq!(seq.f0(), 1.5);
        assert!(seq.prepend(v(4), 0.0).is_err());
        seq.audit().unwrap();
    }
}
