//! Ground truth for testing: exhaustive densest subgraph, direct density
//! evaluation, a reference peel that maximizes `g(S \ {u})` literally, and
//! seeded random instances.
//!
//! Nothing here shares code with the heap-based peel or the reorder, so the
//! two can be checked against each other.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, VertexId};

/// Largest instance `densest_exact` will enumerate.
pub const MAX_EXACT_VERTICES: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FSplit {
    pub vertex: f64,
    pub edge: f64,
    pub total: f64,
}

/// `f_V(S)`, `f_E(S)` and `f(S)` for `S = {v : in_set(v)}`.
pub fn f_split(graph: &DynamicGraph, in_set: impl Fn(VertexId) -> bool) -> FSplit {
    let vertex: f64 = graph
        .vertices()
        .filter(|&v| in_set(v))
        .map(|v| graph.vertex_weight(v))
        .sum();
    let edge: f64 = graph
        .edges()
        .filter(|&(s, d, _)| in_set(s) && in_set(d))
        .map(|(_, _, c)| c)
        .sum();
    FSplit {
        vertex,
        edge,
        total: vertex + edge,
    }
}

pub fn f_split_of(graph: &DynamicGraph, set: &[VertexId]) -> FSplit {
    let members = membership(graph, set);
    f_split(graph, |v| members[v.index()])
}

/// `g(S) = f(S) / |S|`, zero for the empty set.
pub fn density(graph: &DynamicGraph, set: &[VertexId]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    f_split_of(graph, set).total / set.len() as f64
}

fn membership(graph: &DynamicGraph, set: &[VertexId]) -> Vec<bool> {
    let mut members = vec![false; graph.vertex_count()];
    for v in set {
        members[v.index()] = true;
    }
    members
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDensest {
    /// `S*`, ascending.
    pub set: Vec<VertexId>,
    pub density: f64,
}

/// Scans every non-empty subset. Ties go to the larger set, then to the
/// lexicographically smaller sorted member list.
pub fn densest_exact(graph: &DynamicGraph) -> Result<ExactDensest> {
    let n = graph.vertex_count();
    if n > MAX_EXACT_VERTICES {
        return Err(Error::InstanceTooLarge {
            n,
            max: MAX_EXACT_VERTICES,
        });
    }
    if n == 0 {
        return Ok(ExactDensest {
            set: Vec::new(),
            density: 0.0,
        });
    }
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (s, d, c) in graph.edges() {
        nbrs[s.index()].push((d.index(), c));
        nbrs[d.index()].push((s.index(), c));
    }
    let full = 1usize << n;
    let mut f = vec![0.0f64; full];
    let mut best_mask = 0usize;
    let mut best = f64::NEG_INFINITY;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut val = f[rest] + graph.vertex_weight(VertexId::from(low));
        for &(x, c) in &nbrs[low] {
            if rest >> x & 1 == 1 {
                val += c;
            }
        }
        f[mask] = val;
        let g = val / mask.count_ones() as f64;
        if best_mask == 0 || beats(g, mask, best, best_mask) {
            best = g;
            best_mask = mask;
        }
    }
    let set = (0..n)
        .filter(|&i| best_mask >> i & 1 == 1)
        .map(VertexId::from)
        .collect();
    Ok(ExactDensest { set, density: best })
}

fn beats(g: f64, mask: usize, best: f64, best_mask: usize) -> bool {
    let tol = 1e-12 * best.abs().max(1.0);
    if g > best + tol {
        return true;
    }
    if g < best - tol {
        return false;
    }
    let (a, b) = (mask.count_ones(), best_mask.count_ones());
    if a != b {
        return a > b;
    }
    // Lexicographic on sorted member lists: the set holding the smallest
    // differing vertex comes first.
    let diff = mask ^ best_mask;
    mask >> diff.trailing_zeros() & 1 == 1
}

/// One literal greedy step: the member `u` of `set` maximizing
/// `g(set \ {u})` by direct evaluation, ties to the smallest id.
pub fn argmax_removal(graph: &DynamicGraph, set: &[VertexId]) -> Option<VertexId> {
    let mut best: Option<(f64, VertexId)> = None;
    for &u in set {
        let rest: Vec<VertexId> = set.iter().copied().filter(|&x| x != u).collect();
        let g = density(graph, &rest);
        let better = match best {
            None => true,
            Some((bg, _)) => g > bg + 1e-9 * bg.abs().max(1.0),
        };
        if better {
            best = Some((g, u));
        }
    }
    best.map(|(_, u)| u)
}

/// Order produced by applying [`argmax_removal`] until nothing is left, with
/// each removal's `f(S) - f(S \ {u})`. Cubic; small graphs only.
pub fn reference_peel(graph: &DynamicGraph) -> (Vec<VertexId>, Vec<f64>) {
    let mut set: Vec<VertexId> = graph.vertices().collect();
    let mut order = Vec::with_capacity(set.len());
    let mut drops = Vec::with_capacity(set.len());
    while let Some(u) = argmax_removal(graph, &set) {
        let before = f_split_of(graph, &set).total;
        set.retain(|&x| x != u);
        drops.push(before - f_split_of(graph, &set).total);
        order.push(u);
    }
    (order, drops)
}

/// Edge weight distribution for generated graphs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    /// Integers drawn uniformly from `lo..=hi`.
    Integer { lo: u32, hi: u32 },
    /// Reals drawn uniformly from `[lo, hi)`.
    Real { lo: f64, hi: f64 },
    Unit,
}

impl Default for WeightLaw {
    fn default() -> Self {
        WeightLaw::Integer { lo: 1, hi: 10 }
    }
}

impl WeightLaw {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            WeightLaw::Integer { lo, hi } => rng.gen_range(lo..=hi) as f64,
            WeightLaw::Real { lo, hi } => rng.gen_range(lo..hi),
            WeightLaw::Unit => 1.0,
        }
    }
}

/// How endpoints are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "degrees", rename_all = "snake_case")]
pub enum DegreeLaw {
    #[default]
    Uniform,
    /// Chung–Lu style: vertex `i` is drawn with probability proportional to
    /// `(i + 1)^(-1 / (exponent - 1))`, giving a degree tail of that exponent.
    PowerLaw { exponent: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    pub weights: WeightLaw,
    pub degrees: DegreeLaw,
    /// Vertex suspiciousness drawn uniformly from `[0, max)`; zero when unset.
    pub max_vertex_weight: Option<f64>,
}

/// Uniform random simple directed graph with `m` distinct edges.
pub fn gen_random(n: usize, m: usize, weights: WeightLaw, seed: u64) -> Result<DynamicGraph> {
    gen_with(
        n,
        m,
        &GenOptions {
            weights,
            ..GenOptions::default()
        },
        seed,
    )
}

pub fn gen_with(n: usize, m: usize, opts: &GenOptions, seed: u64) -> Result<DynamicGraph> {
    let max = n.saturating_mul(n.saturating_sub(1));
    if m > max {
        return Err(Error::TooManyEdges { m, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DynamicGraph::new();
    for i in 0..n {
        let a = match opts.max_vertex_weight {
            Some(hi) if hi > 0.0 => rng.gen_range(0.0..hi),
            _ => 0.0,
        };
        g.add_vertex(format!("v{i}"), a)?;
    }
    for (s, d) in sample_pairs(n, m, opts.degrees, &mut rng)? {
        let c = opts.weights.sample(&mut rng);
        g.add_edge(VertexId::from(s), VertexId::from(d), c)?;
    }
    Ok(g)
}

/// `m` distinct ordered pairs without self-loops.
pub fn sample_pairs(
    n: usize,
    m: usize,
    degrees: DegreeLaw,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    let max = n.saturating_mul(n.saturating_sub(1));
    if m > max {
        return Err(Error::TooManyEdges { m, max });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    match degrees {
        DegreeLaw::Uniform if m * 2 > max => {
            let mut all: Vec<(usize, usize)> = (0..n)
                .flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d)))
                .collect();
            all.shuffle(rng);
            all.truncate(m);
            Ok(all)
        }
        DegreeLaw::Uniform => {
            let mut seen = HashSet::with_capacity(m);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let s = rng.gen_range(0..n);
                let d = rng.gen_range(0..n);
                if s != d && seen.insert((s, d)) {
                    out.push((s, d));
                }
            }
            Ok(out)
        }
        DegreeLaw::PowerLaw { exponent } => {
            if !(exponent > 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "power-law exponent must exceed 1, got {exponent}"
                )));
            }
            let sampler = PowerLawSampler::new(n, exponent, rng);
            let mut seen = HashSet::with_capacity(m);
            let mut out = Vec::with_capacity(m);
            let mut attempts = 0usize;
            while out.len() < m {
                attempts += 1;
                if attempts > 100 * m + 10_000 {
                    return Err(Error::InvalidConfig(format!(
                        "could not place {m} distinct power-law edges on {n} vertices"
                    )));
                }
                let (s, d) = (sampler.draw(rng), sampler.draw(rng));
                if s != d && seen.insert((s, d)) {
                    out.push((s, d));
                }
            }
            Ok(out)
        }
    }
}

/// Draws vertex indices with power-law popularity. Popularity ranks are
/// shuffled so that hubs are not simply the lowest ids.
#[derive(Clone, Debug)]
pub struct PowerLawSampler {
    index: WeightedIndex<f64>,
    ids: Vec<usize>,
}

impl PowerLawSampler {
    pub fn new(n: usize, exponent: f64, rng: &mut impl Rng) -> Self {
        let beta = 1.0 / (exponent - 1.0);
        let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-beta)).collect();
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(rng);
        PowerLawSampler {
            index: WeightedIndex::new(weights).expect("positive weights"),
            ids,
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        self.ids[self.index.sample(rng)]
    }
}
