//! Incremental maintenance of a peeling sequence.
//!
//! All three update kinds (single insertion, batched insertion, deletion) run
//! the same forward merge. A pending queue of vertices with exact working
//! weights is merged against the untouched remainder of the old sequence:
//!
//! * the queue head is emitted when it beats `(Δ_k, id_k)` of the next old
//!   vertex (Case 1);
//! * a black (update endpoint) or gray (neighbor of a queued vertex) old
//!   vertex joins the queue with its recovered weight (Case 2);
//! * any other old vertex is emitted with its stored `Δ_k` (Case 3).
//!
//! When the queue drains and no queued vertex was pulled from further ahead,
//! the stretch up to the next black vertex is left in place untouched, so the
//! work done is proportional to the affected area rather than to `|V|`.
//!
//! Deletions lower weights, which can move an endpoint ahead of vertices
//! before it. The first position where an endpoint would overtake the old
//! choice is found by a backward scan with exact weights, both endpoints are
//! queued there, and the merge runs from that point. A queued vertex emitted
//! ahead of its old position lowers its later neighbors' weights, so those
//! neighbors are pulled into the queue as well.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, GraphDelta, VertexId};
use crate::heap::{peel_order, PendingQueue};
use crate::peel::{peeling_weight, PeelingSequence, ReorderStats};

const QUEUED: u8 = 1;
const EMITTED: u8 = 2;

/// Scratch state reused across reorders. All per-vertex marks are epoch
/// stamped so nothing is cleared between runs.
#[derive(Debug, Default)]
pub struct Reorderer {
    queue: PendingQueue,
    epoch: u32,
    state_epoch: Vec<u32>,
    state: Vec<u8>,
    entered_epoch: Vec<u32>,
    gray_epoch: Vec<u32>,
    black_epoch: Vec<u32>,
    out: Vec<(VertexId, f64)>,
    /// Recompute every working weight whenever the queue head is emitted and
    /// confirm it is the true minimum. Quadratic; meant for tests.
    pub check_head_optimality: bool,
    head_checks: u64,
    head_violations: u64,
}

struct Run {
    k: usize,
    region_start: usize,
    pending_until: usize,
    stats: ReorderStats,
}

impl Reorderer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of emitted queue heads that failed the optimality recheck.
    pub fn head_violations(&self) -> u64 {
        self.head_violations
    }

    /// Number of emitted queue heads that were rechecked.
    pub fn head_checks(&self) -> u64 {
        self.head_checks
    }

    /// Places a new vertex at the head of the sequence with `Δ = a_v`.
    ///
    /// The sequence is only a valid peel again once the vertex has gone
    /// through a reorder as a black vertex; [`Self::insert_batch_reorder`]
    /// does that for every vertex listed in the delta.
    pub fn insert_vertex_seq(graph: &DynamicGraph, seq: &mut PeelingSequence, v: VertexId) -> Result<()> {
        if !graph.contains(v) {
            return Err(Error::UnknownVertex(v));
        }
        seq.prepend(v, graph.vertex_weight(v))
    }

    /// Reorders after the edge `(src, dst)` was inserted into (or merged in) `graph`.
    pub fn insert_edge_reorder(
        &mut self,
        graph: &DynamicGraph,
        seq: &mut PeelingSequence,
        src: VertexId,
        dst: VertexId,
    ) -> Result<ReorderStats> {
        self.reorder_insertions(graph, seq, &[src, dst])
    }

    /// Reorders after every insertion in `delta` was applied to `graph`.
    /// Vertices of the delta missing from `seq` are prepended first.
    pub fn insert_batch_reorder(
        &mut self,
        graph: &DynamicGraph,
        seq: &mut PeelingSequence,
        delta: &GraphDelta,
    ) -> Result<ReorderStats> {
        if !delta.insertions_only() {
            return Err(Error::WrongDeltaKind);
        }
        let touched = delta.touched_vertices();
        for &v in &touched {
            if !seq.contains(v) {
                Self::insert_vertex_seq(graph, seq, v)?;
            }
        }
        self.reorder_insertions(graph, seq, &touched)
    }

    /// Runs the merge with `dirty` as the black set. Every dirty vertex must
    /// already be in `seq`; their weights may only have grown.
    pub fn reorder_insertions(
        &mut self,
        graph: &DynamicGraph,
        seq: &mut PeelingSequence,
        dirty: &[VertexId],
    ) -> Result<ReorderStats> {
        let started = Instant::now();
        let mut black_positions = Vec::with_capacity(dirty.len());
        for &v in dirty {
            black_positions.push(seq.position(v).ok_or(Error::UnknownVertex(v))?);
        }
        black_positions.sort_unstable();
        black_positions.dedup();
        self.begin(graph);
        for &v in dirty {
            self.black_epoch[v.index()] = self.epoch;
        }
        let start = black_positions.first().copied().unwrap_or(seq.len());
        let mut stats = self.merge(graph, seq, start, &[], &black_positions);
        seq.set_f0(graph.total_suspiciousness());
        stats.elapsed = started.elapsed();
        Ok(stats)
    }

    /// Reorders after weight was removed from the edge `(src, dst)`, either
    /// partially or entirely.
    ///
    /// Fails with [`Error::DeletionNotApplied`] if `graph` does not hold less
    /// total suspiciousness than the sequence was built for.
    pub fn delete_edge_reorder(
        &mut self,
        graph: &DynamicGraph,
        seq: &mut PeelingSequence,
        src: VertexId,
        dst: VertexId,
    ) -> Result<ReorderStats> {
        let started = Instant::now();
        let pos_src = seq.position(src).ok_or(Error::UnknownVertex(src))?;
        let pos_dst = seq.position(dst).ok_or(Error::UnknownVertex(dst))?;
        if graph.total_suspiciousness() >= seq.f0() {
            return Err(Error::DeletionNotApplied(src, dst));
        }
        let i = pos_src.min(pos_dst);
        let start = first_overtake(graph, seq, i, [src, dst]);
        self.begin(graph);
        let mut stats = self.merge(graph, seq, start, &[src, dst], &[]);
        seq.set_f0(graph.total_suspiciousness());
        stats.elapsed = started.elapsed();
        Ok(stats)
    }

    fn begin(&mut self, graph: &DynamicGraph) {
        let n = graph.vertex_count();
        self.queue.reserve_vertices(n);
        for marks in [
            &mut self.state_epoch,
            &mut self.entered_epoch,
            &mut self.gray_epoch,
            &mut self.black_epoch,
        ] {
            if marks.len() < n {
                marks.resize(n, 0);
            }
        }
        if self.state.len() < n {
            self.state.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            for marks in [
                &mut self.state_epoch,
                &mut self.entered_epoch,
                &mut self.gray_epoch,
                &mut self.black_epoch,
            ] {
                marks.fill(0);
            }
            self.epoch = 1;
        }
        self.out.clear();
        debug_assert!(self.queue.is_empty());
    }

    #[inline]
    fn state_of(&self, v: VertexId) -> u8 {
        if self.state_epoch[v.index()] == self.epoch {
            self.state[v.index()]
        } else {
            0
        }
    }

    #[inline]
    fn set_state(&mut self, v: VertexId, s: u8) {
        self.state_epoch[v.index()] = self.epoch;
        self.state[v.index()] = s;
    }

    #[inline]
    fn in_working_set(&self, seq: &PeelingSequence, k: usize, v: VertexId) -> bool {
        match self.state_of(v) {
            QUEUED => true,
            EMITTED => false,
            _ => seq.position(v).is_some_and(|p| p >= k),
        }
    }

    /// Exact `w_v(W)` for the current working set `W`.
    fn recover(&self, graph: &DynamicGraph, seq: &PeelingSequence, k: usize, v: VertexId) -> f64 {
        peeling_weight(graph, v, |x| self.in_working_set(seq, k, x))
    }

    fn enqueue(
        &mut self,
        graph: &DynamicGraph,
        seq: &PeelingSequence,
        run: &mut Run,
        v: VertexId,
    ) {
        let w = self.recover(graph, seq, run.k, v);
        self.queue.push(v, w);
        self.set_state(v, QUEUED);
        self.entered_epoch[v.index()] = self.epoch;
        run.stats.touched_vertices += 1;
        for (x, _) in graph.incident(v) {
            if self.entered_epoch[x.index()] != self.epoch {
                run.stats.touched_edges += 1;
            }
            self.gray_epoch[x.index()] = self.epoch;
        }
    }

    fn merge(
        &mut self,
        graph: &DynamicGraph,
        seq: &mut PeelingSequence,
        start: usize,
        seeds: &[VertexId],
        black_positions: &[usize],
    ) -> ReorderStats {
        let n = seq.len();
        let mut run = Run {
            k: start,
            region_start: start,
            pending_until: start,
            stats: ReorderStats::default(),
        };
        for &s in seeds {
            if self.state_of(s) != QUEUED {
                self.enqueue(graph, seq, &mut run, s);
                let p = seq.position(s).expect("seed in sequence");
                run.pending_until = run.pending_until.max(p + 1);
            }
        }
        let mut next_black = 0usize;

        loop {
            while run.k < n && self.state_of(seq.vertex_at(run.k)) != 0 {
                run.k += 1;
            }

            if self.queue.is_empty() && run.k >= run.pending_until {
                // Nothing pending: commit the rewritten region and jump to the
                // next black vertex, leaving the stretch in between in place.
                debug_assert_eq!(self.out.len(), run.k - run.region_start);
                seq.write_range(run.region_start, &self.out);
                self.out.clear();
                while next_black < black_positions.len() && black_positions[next_black] < run.k {
                    next_black += 1;
                }
                let Some(&p) = black_positions.get(next_black) else {
                    break;
                };
                let u = seq.vertex_at(p);
                if self.state_of(u) != 0 {
                    next_black += 1;
                    continue;
                }
                run.k = p;
                run.region_start = p;
                self.enqueue(graph, seq, &mut run, u);
                run.k += 1;
                continue;
            }

            if run.k >= n {
                self.emit_head(graph, seq, &mut run);
                continue;
            }

            let uk = seq.vertex_at(run.k);
            let dk = seq.delta_at(run.k);
            let head_first = self
                .queue
                .peek()
                .is_some_and(|(h, wh)| peel_order(wh, h, dk, uk) == Ordering::Less);
            if head_first {
                self.emit_head(graph, seq, &mut run);
            } else if self.black_epoch[uk.index()] == self.epoch
                || (!self.queue.is_empty() && self.gray_epoch[uk.index()] == self.epoch)
            {
                self.enqueue(graph, seq, &mut run, uk);
                run.k += 1;
            } else {
                self.set_state(uk, EMITTED);
                self.out.push((uk, dk));
                run.k += 1;
            }
        }
        run.stats
    }

    fn emit_head(&mut self, graph: &DynamicGraph, seq: &PeelingSequence, run: &mut Run) {
        if self.check_head_optimality {
            self.verify_head(graph, seq, run.k);
        }
        let (u, w) = self.queue.pop().expect("queue non-empty");
        self.set_state(u, EMITTED);
        self.out.push((u, w));
        for (x, c) in graph.incident(u) {
            self.queue.decrease_by(x, c);
        }
        let pos_u = seq.position(u).expect("queued vertex in sequence");
        if pos_u >= run.k {
            // u leaves the working set ahead of its old slot, so any later
            // neighbor not yet queued now weighs less than its stored Δ.
            for (x, _) in graph.incident(u) {
                if self.state_of(x) == 0 {
                    if let Some(px) = seq.position(x).filter(|&px| px >= run.k) {
                        self.enqueue(graph, seq, run, x);
                        run.pending_until = run.pending_until.max(px + 1);
                    }
                }
            }
        }
    }

    fn verify_head(&mut self, graph: &DynamicGraph, seq: &PeelingSequence, k: usize) {
        let Some((head, _)) = self.queue.peek() else {
            return;
        };
        self.head_checks += 1;
        let mut best: Option<(f64, VertexId)> = None;
        for v in graph.vertices() {
            if !self.in_working_set(seq, k, v) {
                continue;
            }
            let w = self.recover(graph, seq, k, v);
            if best.is_none_or(|(bw, bv)| peel_order(w, v, bw, bv) == Ordering::Less) {
                best = Some((w, v));
            }
        }
        if best.map(|(_, v)| v) != Some(head) {
            self.head_violations += 1;
        }
    }
}

/// Earliest position before `i` at which one of `endpoints`, with its
/// lowered weight, would be peeled ahead of the vertex stored there. Returns
/// `i` when no such position exists.
fn first_overtake(graph: &DynamicGraph, seq: &PeelingSequence, i: usize, endpoints: [VertexId; 2]) -> usize {
    let mut weight = [0.0f64; 2];
    let mut earlier: [HashMap<VertexId, f64>; 2] = Default::default();
    for (slot, &e) in endpoints.iter().enumerate() {
        weight[slot] = graph.vertex_weight(e);
        for (x, c) in graph.incident(e) {
            match seq.position(x) {
                Some(p) if p >= i => weight[slot] += c,
                Some(_) => *earlier[slot].entry(x).or_insert(0.0) += c,
                None => {}
            }
        }
    }
    let mut start = i;
    for t in (0..i).rev() {
        let x = seq.vertex_at(t);
        let dt = seq.delta_at(t);
        for slot in 0..2 {
            if let Some(c) = earlier[slot].get(&x) {
                weight[slot] += c;
            }
            if peel_order(weight[slot], endpoints[slot], dt, x) == Ordering::Less {
                start = t;
            }
        }
    }
    start
}

/// `w_u(S_from)` on the current graph, where `S_from` is every vertex at
/// position `from` or later.
pub fn recover_weight(graph: &DynamicGraph, seq: &PeelingSequence, u: VertexId, from: usize) -> f64 {
    peeling_weight(graph, u, |x| seq.position(x).is_some_and(|p| p >= from))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peel::peel;

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

    fn assert_matches_static(g: &DynamicGraph, seq: &PeelingSequence) {
        let (fresh, _) = peel(g);
        assert_eq!(seq.order(), fresh.order());
        assert_eq!(seq.deltas(), fresh.deltas());
        seq.audit().unwrap();
    }

    #[test]
    fn recover_weight_by_scan() {
        let g = path(4);
        let (seq, _) = peel(&g);
        assert_eq!(recover_weight(&g, &seq, v(2), 0), 2.0);
        assert_eq!(recover_weight(&g, &seq, v(0), 0), seq.delta_at(0));
    }

    #[test]
    fn closing_the_cycle() {
        let mut g = path(4);
        let (mut seq, _) = peel(&g);
        g.add_edge(v(0), v(3), 1.0).unwrap();
        let mut r = Reorderer::new();
        r.insert_edge_reorder(&g, &mut seq, v(0), v(3)).unwrap();
        assert_matches_static(&g, &seq);
        assert_eq!(seq.density_of_prefix(0).unwrap(), 1.0);
    }

    #[test]
    fn untouched_order_survives_light_edge() {
        let mut g = path(4);
        let (mut seq, _) = peel(&g);
        let before = seq.order();
        g.add_edge(v(2), v(3), 1.0 / 1_048_576.0).unwrap();
        Reorderer::new()
            .insert_edge_reorder(&g, &mut seq, v(2), v(3))
            .unwrap();
        assert_eq!(seq.order(), before);
        assert_matches_static(&g, &seq);
    }

    #[test]
    fn batch_with_new_vertex() {
        let mut g = path(4);
        let (mut seq, _) = peel(&g);
        let x = g.add_vertex("x", 0.0).unwrap();
        let mut delta = GraphDelta::new();
        delta.new_vertices.push(x);
        for (s, d) in [(x, v(1)), (x, v(2)), (v(0), v(3))] {
            g.add_edge(s, d, 1.0).unwrap();
            delta.push_insert(s, d, 1.0).unwrap();
        }
        Reorderer::new()
            .insert_batch_reorder(&g, &mut seq, &delta)
            .unwrap();
        assert_matches_static(&g, &seq);
    }

    #[test]
    fn batch_rejects_deletions() {
        let g = path(3);
        let (mut seq, _) = peel(&g);
        let mut delta = GraphDelta::new();
        delta.push_delete(v(0), v(1), 1.0);
        assert!(matches!(
            Reorderer::new().insert_batch_reorder(&g, &mut seq, &delta),
            Err(Error::WrongDeltaKind)
        ));
    }

    #[test]
    fn delete_from_cycle_gives_path() {
        let mut g = path(4);
        g.add_edge(v(0), v(3), 1.0).unwrap();
        let (mut seq, _) = peel(&g);
        let mut r = Reorderer::new();
        assert!(matches!(
            r.delete_edge_reorder(&g, &mut seq, v(0), v(3)),
            Err(Error::DeletionNotApplied(..))
        ));
        g.remove_edge(v(0), v(3)).unwrap();
        r.delete_edge_reorder(&g, &mut seq, v(0), v(3)).unwrap();
        assert_matches_static(&g, &seq);
        assert_eq!(seq.order(), peel(&path(4)).0.order());
    }

    #[test]
    fn head_checks_pass_on_reorder() {
        let mut g = path(6);
        let (mut seq, _) = peel(&g);
        let mut r = Reorderer::new();
        r.check_head_optimality = true;
        g.add_edge(v(0), v(4), 3.0).unwrap();
        r.insert_edge_reorder(&g, &mut seq, v(0), v(4)).unwrap();
        assert!(r.head_checks() > 0);
        assert_eq!(r.head_violations(), 0);
        assert_matches_static(&g, &seq);
    }
}
