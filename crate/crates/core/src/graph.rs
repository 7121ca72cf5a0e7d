//! Mutable directed weighted graph with interned vertex labels.
//!
//! Every edge is stored twice, once in the source's out-list and once in the
//! target's in-list, so peeling weights can be computed by scanning both
//! directions. Repeated insertions of the same ordered pair merge by summing
//! weights.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight at or below which a partially deleted edge is dropped.
pub const EDGE_EPSILON: f64 = 1e-12;
/// Slack allowed when a deletion requests slightly more than is stored.
pub const DELETE_TOLERANCE: f64 = 1e-9;

/// Dense internal index of a vertex. Stable for the lifetime of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(u32::try_from(i).expect("vertex index exceeds u32"))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeEventKind {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
    pub kind: EdgeEventKind,
}

impl EdgeEvent {
    pub fn insert(src: VertexId, dst: VertexId, weight: f64) -> Self {
        EdgeEvent {
            src,
            dst,
            weight,
            kind: EdgeEventKind::Insert,
        }
    }

    pub fn delete(src: VertexId, dst: VertexId, weight: f64) -> Self {
        EdgeEvent {
            src,
            dst,
            weight,
            kind: EdgeEventKind::Delete,
        }
    }
}

/// A set of edge updates plus the vertices they introduce.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphDelta {
    pub events: Vec<EdgeEvent>,
    pub new_vertices: Vec<VertexId>,
}

impl GraphDelta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_insert(&mut self, src: VertexId, dst: VertexId, weight: f64) -> Result<()> {
        if !(weight > 0.0) {
            return Err(Error::NonPositiveWeight(weight));
        }
        self.events.push(EdgeEvent::insert(src, dst, weight));
        Ok(())
    }

    pub fn push_delete(&mut self, src: VertexId, dst: VertexId, weight: f64) {
        self.events.push(EdgeEvent::delete(src, dst, weight));
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.new_vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn insertions_only(&self) -> bool {
        self.events.iter().all(|e| e.kind == EdgeEventKind::Insert)
    }

    /// Endpoints of every event plus the new vertices, deduplicated.
    pub fn touched_vertices(&self) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .events
            .iter()
            .flat_map(|e| [e.src, e.dst])
            .chain(self.new_vertices.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn clear(&mut self) {
        self.events.clear();
        self.new_vertices.clear();
    }
}

#[derive(Clone, Copy, Debug)]
struct EdgeSlot {
    out_idx: u32,
    in_idx: u32,
}

#[derive(Clone, Debug, Default)]
pub struct DynamicGraph {
    labels: Vec<String>,
    by_label: HashMap<String, VertexId>,
    vertex_weight: Vec<f64>,
    out_adj: Vec<Vec<(VertexId, f64)>>,
    in_adj: Vec<Vec<(VertexId, f64)>>,
    slots: HashMap<(VertexId, VertexId), EdgeSlot>,
    // a_u + weights of every incident edge, i.e. the peeling weight against V.
    strength: Vec<f64>,
    total: f64,
}

impl DynamicGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph with vertices labelled `"0".."n-1"` and zero vertex weights.
    pub fn with_vertices(n: usize) -> Self {
        let mut g = Self::new();
        for i in 0..n {
            g.add_vertex(i.to_string(), 0.0).expect("fresh labels");
        }
        g
    }

    pub fn add_vertex(&mut self, label: impl Into<String>, a: f64) -> Result<VertexId> {
        let label = label.into();
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::NegativeVertexWeight(a));
        }
        if self.by_label.contains_key(&label) {
            return Err(Error::DuplicateVertex(label));
        }
        let id = VertexId::from(self.labels.len());
        self.by_label.insert(label.clone(), id);
        self.labels.push(label);
        self.vertex_weight.push(a);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        self.strength.push(a);
        self.total += a;
        Ok(id)
    }

    /// Inserts `c` on the edge `(src, dst)`, merging into an existing edge.
    /// Returns whether the edge already existed.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, c: f64) -> Result<bool> {
        self.check_vertex(src)?;
        self.check_vertex(dst)?;
        if src == dst {
            return Err(Error::SelfLoopRejected(src));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::NonPositiveWeight(c));
        }
        let merged = match self.slots.get(&(src, dst)) {
            Some(slot) => {
                self.out_adj[src.index()][slot.out_idx as usize].1 += c;
                self.in_adj[dst.index()][slot.in_idx as usize].1 += c;
                true
            }
            None => {
                let slot = EdgeSlot {
                    out_idx: self.out_adj[src.index()].len() as u32,
                    in_idx: self.in_adj[dst.index()].len() as u32,
                };
                self.out_adj[src.index()].push((dst, c));
                self.in_adj[dst.index()].push((src, c));
                self.slots.insert((src, dst), slot);
                false
            }
        };
        self.strength[src.index()] += c;
        self.strength[dst.index()] += c;
        self.total += c;
        Ok(merged)
    }

    /// Removes `c` from the edge `(src, dst)`. Returns whether the edge was
    /// dropped entirely.
    pub fn delete_edge(&mut self, src: VertexId, dst: VertexId, c: f64) -> Result<bool> {
        self.check_vertex(src)?;
        self.check_vertex(dst)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::NonPositiveWeight(c));
        }
        let slot = *self
            .slots
            .get(&(src, dst))
            .ok_or(Error::EdgeNotFound(src, dst))?;
        let stored = self.out_adj[src.index()][slot.out_idx as usize].1;
        if c > stored + DELETE_TOLERANCE {
            return Err(Error::WeightUnderflow {
                src,
                dst,
                stored,
                requested: c,
            });
        }
        let remaining = stored - c;
        if remaining <= EDGE_EPSILON {
            self.unlink(src, dst, slot, stored);
            Ok(true)
        } else {
            self.out_adj[src.index()][slot.out_idx as usize].1 = remaining;
            self.in_adj[dst.index()][slot.in_idx as usize].1 = remaining;
            self.strength[src.index()] -= c;
            self.strength[dst.index()] -= c;
            self.total -= c;
            Ok(false)
        }
    }

    /// Drops the edge `(src, dst)` whatever its weight; returns the weight removed.
    pub fn remove_edge(&mut self, src: VertexId, dst: VertexId) -> Result<f64> {
        self.check_vertex(src)?;
        self.check_vertex(dst)?;
        let slot = *self
            .slots
            .get(&(src, dst))
            .ok_or(Error::EdgeNotFound(src, dst))?;
        let stored = self.out_adj[src.index()][slot.out_idx as usize].1;
        self.unlink(src, dst, slot, stored);
        Ok(stored)
    }

    fn unlink(&mut self, src: VertexId, dst: VertexId, slot: EdgeSlot, stored: f64) {
        self.slots.remove(&(src, dst));

        let outs = &mut self.out_adj[src.index()];
        outs.swap_remove(slot.out_idx as usize);
        if let Some(&(moved, _)) = outs.get(slot.out_idx as usize) {
            self.slots
                .get_mut(&(src, moved))
                .expect("moved out-edge has a slot")
                .out_idx = slot.out_idx;
        }

        let ins = &mut self.in_adj[dst.index()];
        ins.swap_remove(slot.in_idx as usize);
        if let Some(&(moved, _)) = ins.get(slot.in_idx as usize) {
            self.slots
                .get_mut(&(moved, dst))
                .expect("moved in-edge has a slot")
                .in_idx = slot.in_idx;
        }

        self.strength[src.index()] -= stored;
        self.strength[dst.index()] -= stored;
        self.total -= stored;
    }

    /// `c_uv + c_vu`, with 0 for a missing direction.
    pub fn combined_weight(&self, u: VertexId, v: VertexId) -> f64 {
        self.edge_weight(u, v).unwrap_or(0.0) + self.edge_weight(v, u).unwrap_or(0.0)
    }

    pub fn edge_weight(&self, src: VertexId, dst: VertexId) -> Option<f64> {
        self.slots
            .get(&(src, dst))
            .map(|slot| self.out_adj[src.index()][slot.out_idx as usize].1)
    }

    pub fn has_edge(&self, src: VertexId, dst: VertexId) -> bool {
        self.slots.contains_key(&(src, dst))
    }

    pub fn out_edges(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.out_adj[v.index()]
    }

    pub fn in_edges(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.in_adj[v.index()]
    }

    /// Out-neighbors then in-neighbors. A vertex linked in both directions
    /// shows up twice, once per stored edge.
    pub fn incident(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.out_adj[v.index()]
            .iter()
            .chain(self.in_adj[v.index()].iter())
            .copied()
    }

    pub fn incident_len(&self, v: VertexId) -> usize {
        self.out_adj[v.index()].len() + self.in_adj[v.index()].len()
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_adj[v.index()].len()
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_adj[v.index()].len()
    }

    pub fn vertex_weight(&self, v: VertexId) -> f64 {
        self.vertex_weight[v.index()]
    }

    /// Peeling weight of `v` against the whole vertex set, `w_v(V)`.
    pub fn strength(&self, v: VertexId) -> f64 {
        self.strength[v.index()]
    }

    /// Maintained `f(V)`.
    pub fn total_suspiciousness(&self) -> f64 {
        self.total
    }

    pub fn recompute_total(&self) -> f64 {
        let vertex_part: f64 = self.vertex_weight.iter().sum();
        let edge_part: f64 = self
            .out_adj
            .iter()
            .flat_map(|outs| outs.iter().map(|&(_, c)| c))
            .sum();
        vertex_part + edge_part
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.slots.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.labels.len()).map(VertexId::from)
    }

    /// Every stored edge as `(src, dst, weight)`, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.out_adj.iter().enumerate().flat_map(|(s, outs)| {
            let src = VertexId::from(s);
            outs.iter().map(move |&(dst, c)| (src, dst, c))
        })
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v.index()]
    }

    pub fn vertex_id(&self, label: &str) -> Option<VertexId> {
        self.by_label.get(label).copied()
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Full consistency scan: adjacency symmetry, weight signs, cached totals.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let mut seen = 0usize;
        for (s, outs) in self.out_adj.iter().enumerate() {
            let src = VertexId::from(s);
            for (i, &(dst, c)) in outs.iter().enumerate() {
                seen += 1;
                if !(c > 0.0) {
                    return Err(format!("edge ({src},{dst}) has weight {c}"));
                }
                let slot = self
                    .slots
                    .get(&(src, dst))
                    .ok_or_else(|| format!("edge ({src},{dst}) missing from index"))?;
                if slot.out_idx as usize != i {
                    return Err(format!("edge ({src},{dst}) out slot mismatch"));
                }
                match self.in_adj[dst.index()].get(slot.in_idx as usize) {
                    Some(&(back, w)) if back == src && w == c => {}
                    _ => return Err(format!("edge ({src},{dst}) missing from in-list")),
                }
            }
        }
        let in_total: usize = self.in_adj.iter().map(Vec::len).sum();
        if seen != self.slots.len() || in_total != seen {
            return Err(format!(
                "edge counts disagree: out {seen}, in {in_total}, index {}",
                self.slots.len()
            ));
        }
        if let Some(a) = self.vertex_weight.iter().find(|a| !(**a >= 0.0)) {
            return Err(format!("negative vertex weight {a}"));
        }
        let total = self.recompute_total();
        if !close(total, self.total) {
            return Err(format!("f(V) drifted: cached {}, scanned {total}", self.total));
        }
        for v in self.vertices() {
            let scanned = self.vertex_weight(v) + self.incident(v).map(|(_, c)| c).sum::<f64>();
            if !close(scanned, self.strength(v)) {
                return Err(format!(
                    "w_{v}(V) drifted: cached {}, scanned {scanned}",
                    self.strength(v)
                ));
            }
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    #[test]
    fn first_vertex_gets_index_zero() {
        let mut g = DynamicGraph::new();
        assert_eq!(g.add_vertex("u9", 0.0).unwrap(), v(0));
        assert_eq!(g.vertex_count(), 1);
        assert!(matches!(
            g.add_vertex("u9", 0.0),
            Err(Error::DuplicateVertex(l)) if l == "u9"
        ));
    }

    #[test]
    fn vertex_weight_adds_to_total() {
        let mut g = DynamicGraph::new();
        g.add_vertex("a", 0.0).unwrap();
        let before = g.total_suspiciousness();
        g.add_vertex("m1", 0.5).unwrap();
        assert_eq!(g.total_suspiciousness() - before, 0.5);
        assert!(matches!(
            g.add_vertex("neg", -1.0),
            Err(Error::NegativeVertexWeight(_))
        ));
    }

    #[test]
    fn duplicate_edges_merge() {
        let mut g = DynamicGraph::with_vertices(2);
        assert!(!g.add_edge(v(0), v(1), 1.0).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(g.add_edge(v(0), v(1), 2.0).unwrap());
        assert_eq!(g.edge_weight(v(0), v(1)), Some(3.0));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_suspiciousness(), 3.0);
    }

    #[test]
    fn rejects_self_loops_and_bad_weights() {
        let mut g = DynamicGraph::with_vertices(2);
        assert!(matches!(
            g.add_edge(v(0), v(0), 1.0),
            Err(Error::SelfLoopRejected(_))
        ));
        assert!(matches!(
            g.add_edge(v(0), v(1), 0.0),
            Err(Error::NonPositiveWeight(_))
        ));
        assert!(matches!(
            g.add_edge(v(0), v(7), 1.0),
            Err(Error::UnknownVertex(_))
        ));
    }

    #[test]
    fn delete_partial_and_full() {
        let mut g = DynamicGraph::with_vertices(7);
        g.add_edge(v(0), v(1), 3.0).unwrap();
        assert!(!g.delete_edge(v(0), v(1), 1.0).unwrap());
        assert_eq!(g.edge_weight(v(0), v(1)), Some(2.0));
        assert!(g.delete_edge(v(0), v(1), 2.0).unwrap());
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.total_suspiciousness(), 0.0);
        assert!(matches!(
            g.delete_edge(v(5), v(6), 1.0),
            Err(Error::EdgeNotFound(_, _))
        ));
        g.add_edge(v(2), v(3), 1.0).unwrap();
        assert!(matches!(
            g.delete_edge(v(2), v(3), 1.5),
            Err(Error::WeightUnderflow { .. })
        ));
        g.audit().unwrap();
    }

    #[test]
    fn combined_weight_is_symmetric() {
        let mut g = DynamicGraph::with_vertices(4);
        g.add_edge(v(0), v(1), 2.0).unwrap();
        assert_eq!(g.combined_weight(v(1), v(0)), 2.0);
        g.add_edge(v(1), v(0), 0.5).unwrap();
        assert_eq!(g.combined_weight(v(0), v(1)), 2.5);
        assert_eq!(g.combined_weight(v(2), v(3)), 0.0);
    }

    #[test]
    fn swap_remove_keeps_index_consistent() {
        let mut g = DynamicGraph::with_vertices(5);
        for d in 1..5 {
            g.add_edge(v(0), v(d), d as f64).unwrap();
            g.add_edge(v(d), v(0), 1.0).unwrap();
        }
        g.remove_edge(v(0), v(1)).unwrap();
        g.remove_edge(v(3), v(0)).unwrap();
        g.audit().unwrap();
        assert_eq!(g.edge_weight(v(0), v(4)), Some(4.0));
        assert_eq!(g.strength(v(0)), 2.0 + 3.0 + 4.0 + 1.0 + 1.0 + 1.0);
    }
}
