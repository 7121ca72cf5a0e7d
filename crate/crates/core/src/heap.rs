//! Addressable binary min-heap over vertices keyed by `(weight, VertexId)`.

use std::cmp::Ordering;

use crate::graph::VertexId;

const ABSENT: u32 = u32::MAX;

/// The global peeling order: smaller weight first, then smaller id.
#[inline]
pub fn peel_order(wa: f64, a: VertexId, wb: f64, b: VertexId) -> Ordering {
    // +0.0 folds -0.0 into 0.0 so total_cmp does not split them.
    (wa + 0.0).total_cmp(&(wb + 0.0)).then(a.cmp(&b))
}

#[inline]
fn less(a: (f64, VertexId), b: (f64, VertexId)) -> bool {
    peel_order(a.0, a.1, b.0, b.1) == Ordering::Less
}

/// Min-priority queue with decrease-key, used both by the static peel and
/// as the pending queue of the incremental reorder.
///
/// The slot table is indexed by vertex and sized to the graph, so it can be
/// reused across reorders without reallocation; it is left clean whenever the
/// heap drains.
#[derive(Clone, Debug, Default)]
pub struct PendingQueue {
    heap: Vec<(f64, VertexId)>,
    slot: Vec<u32>,
    ops: u64,
}

impl PendingQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(vertices: usize) -> Self {
        let mut q = Self::new();
        q.reserve_vertices(vertices);
        q
    }

    /// Makes room for vertex ids below `vertices`.
    pub fn reserve_vertices(&mut self, vertices: usize) {
        if self.slot.len() < vertices {
            self.slot.resize(vertices, ABSENT);
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.slot.get(v.index()).is_some_and(|&s| s != ABSENT)
    }

    pub fn priority(&self, v: VertexId) -> Option<f64> {
        let s = *self.slot.get(v.index())?;
        (s != ABSENT).then(|| self.heap[s as usize].0)
    }

    /// Pushes and key updates performed since construction or the last reset.
    pub fn operations(&self) -> u64 {
        self.ops
    }

    pub fn reset_operations(&mut self) {
        self.ops = 0;
    }

    /// Inserts `v`. Returns false (and does nothing) if already queued.
    pub fn push(&mut self, v: VertexId, weight: f64) -> bool {
        self.reserve_vertices(v.index() + 1);
        if self.slot[v.index()] != ABSENT {
            return false;
        }
        self.ops += 1;
        let at = self.heap.len();
        self.heap.push((weight, v));
        self.slot[v.index()] = at as u32;
        self.sift_up(at);
        true
    }

    pub fn peek(&self) -> Option<(VertexId, f64)> {
        self.heap.first().map(|&(w, v)| (v, w))
    }

    pub fn pop(&mut self) -> Option<(VertexId, f64)> {
        if self.heap.is_empty() {
            return None;
        }
        let last = self.heap.len() - 1;
        self.swap(0, last);
        let (w, v) = self.heap.pop().expect("non-empty");
        self.slot[v.index()] = ABSENT;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((v, w))
    }

    /// Sets the key of a queued vertex. Returns false if `v` is not queued.
    pub fn set_priority(&mut self, v: VertexId, weight: f64) -> bool {
        let Some(&s) = self.slot.get(v.index()) else {
            return false;
        };
        if s == ABSENT {
            return false;
        }
        self.ops += 1;
        let s = s as usize;
        let old = self.heap[s];
        self.heap[s].0 = weight;
        if less(self.heap[s], old) {
            self.sift_up(s);
        } else {
            self.sift_down(s);
        }
        true
    }

    /// Lowers the key of `v` by `amount` if queued.
    pub fn decrease_by(&mut self, v: VertexId, amount: f64) -> bool {
        match self.priority(v) {
            Some(w) => self.set_priority(v, w - amount),
            None => false,
        }
    }

    pub fn clear(&mut self) {
        for &(_, v) in &self.heap {
            self.slot[v.index()] = ABSENT;
        }
        self.heap.clear();
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.slot[self.heap[i].1.index()] = i as u32;
        self.slot[self.heap[j].1.index()] = j as u32;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if less(self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let m = if r < n && less(self.heap[r], self.heap[l]) { r } else { l };
            if less(self.heap[m], self.heap[i]) {
                self.swap(i, m);
                i = m;
            } else {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn ties_break_by_id() {
        let mut q = PendingQueue::new();
        q.push(VertexId(5), 1.0);
        q.push(VertexId(2), 1.0);
        q.push(VertexId(9), 0.5);
        assert_eq!(q.pop(), Some((VertexId(9), 0.5)));
        assert_eq!(q.pop(), Some((VertexId(2), 1.0)));
        assert_eq!(q.pop(), Some((VertexId(5), 1.0)));
        assert!(q.pop().is_none());
    }

    #[test]
    fn negative_zero_equals_zero() {
        assert_eq!(
            peel_order(-0.0, VertexId(1), 0.0, VertexId(1)),
            Ordering::Equal
        );
    }

    #[test]
    fn push_is_idempotent_per_vertex() {
        let mut q = PendingQueue::new();
        assert!(q.push(VertexId(3), 2.0));
        assert!(!q.push(VertexId(3), 1.0));
        assert_eq!(q.len(), 1);
        assert_eq!(q.priority(VertexId(3)), Some(2.0));
    }

    proptest! {
        #[test]
        fn pops_in_peel_order(
            keys in prop::collection::vec(0u8..6, 1..40),
            updates in prop::collection::vec((0usize..40, 0u8..6), 0..40),
        ) {
            let mut q = PendingQueue::new();
            let mut expect: Vec<(f64, VertexId)> = Vec::new();
            for (i, k) in keys.iter().enumerate() {
                q.push(VertexId(i as u32), *k as f64);
                expect.push((*k as f64, VertexId(i as u32)));
            }
            for (i, k) in updates {
                if i < expect.len() {
                    q.set_priority(VertexId(i as u32), k as f64);
                    expect[i].0 = k as f64;
                }
            }
            expect.sort_by(|a, b| peel_order(a.0, a.1, b.0, b.1));
            let got: Vec<(f64, VertexId)> =
                std::iter::from_fn(|| q.pop()).map(|(v, w)| (w, v)).collect();
            prop_assert_eq!(got, expect);
            prop_assert!((0..keys.len()).all(|i| !q.contains(VertexId(i as u32))));
        }
    }
}
