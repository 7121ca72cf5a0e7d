//! Enumerating several dense communities by repeatedly detecting one and
//! removing it from the graph.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{DynamicGraph, VertexId};
use crate::peel::{peel, PeelingSequence};
use crate::reorder::Reorderer;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Removal {
    /// Build the residual graph and peel it from scratch.
    #[default]
    Repeel,
    /// Delete the community's incident edges one at a time with deletion
    /// reorders, keeping one sequence throughout.
    Incremental,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Community {
    /// Ascending.
    pub vertices: Vec<VertexId>,
    pub density: f64,
}

/// Up to `k` vertex-disjoint communities in detection order. Stops early once
/// the remaining graph is empty or carries no suspiciousness.
pub fn enumerate_dense(graph: &DynamicGraph, k: usize, removal: Removal) -> Result<Vec<Community>> {
    match removal {
        Removal::Repeel => Ok(by_repeel(graph, k)),
        Removal::Incremental => by_deletion(graph, k),
    }
}

fn by_repeel(graph: &DynamicGraph, k: usize) -> Vec<Community> {
    let mut alive = vec![true; graph.vertex_count()];
    let mut out = Vec::new();
    while out.len() < k {
        let (residual, back) = residual_graph(graph, &alive);
        if residual.vertex_count() == 0 {
            break;
        }
        let (_, det) = peel(&residual);
        if !(det.density > 0.0) {
            break;
        }
        let mut vertices: Vec<VertexId> = det.community.iter().map(|v| back[v.index()]).collect();
        vertices.sort_unstable();
        for v in &vertices {
            alive[v.index()] = false;
        }
        out.push(Community {
            vertices,
            density: det.density,
        });
    }
    out
}

/// Induced subgraph on `alive`, with the map from its ids back to `graph`'s.
pub fn residual_graph(graph: &DynamicGraph, alive: &[bool]) -> (DynamicGraph, Vec<VertexId>) {
    let mut g = DynamicGraph::new();
    let mut forward = vec![None; graph.vertex_count()];
    let mut back = Vec::new();
    for v in graph.vertices().filter(|v| alive[v.index()]) {
        let id = g
            .add_vertex(graph.label(v), graph.vertex_weight(v))
            .expect("labels are unique");
        forward[v.index()] = Some(id);
        back.push(v);
    }
    for (s, d, c) in graph.edges() {
        if let (Some(s), Some(d)) = (forward[s.index()], forward[d.index()]) {
            g.add_edge(s, d, c).expect("valid edge");
        }
    }
    (g, back)
}

fn by_deletion(graph: &DynamicGraph, k: usize) -> Result<Vec<Community>> {
    let mut g = graph.clone();
    let (mut seq, _) = peel(&g);
    let mut reorderer = Reorderer::new();
    let mut retired = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    while out.len() < k {
        let Some((vertices, density)) = densest_among(&seq, &retired) else {
            break;
        };
        if !(density > 0.0) {
            break;
        }
        for &v in &vertices {
            retired[v.index()] = true;
        }
        for &v in &vertices {
            let incident: Vec<(VertexId, VertexId)> = g
                .out_edges(v)
                .iter()
                .map(|&(d, _)| (v, d))
                .chain(g.in_edges(v).iter().map(|&(s, _)| (s, v)))
                .collect();
            for (s, d) in incident {
                g.remove_edge(s, d)?;
                reorderer.delete_edge_reorder(&g, &mut seq, s, d)?;
            }
        }
        out.push(Community { vertices, density });
    }
    Ok(out)
}

/// Densest prefix of `seq` with retired vertices skipped. Retired vertices
/// are isolated, so the remaining order is exactly the peel of the residual
/// graph.
fn densest_among(seq: &PeelingSequence, retired: &[bool]) -> Option<(Vec<VertexId>, f64)> {
    let live: Vec<(VertexId, f64)> = seq.iter().filter(|(v, _)| !retired[v.index()]).collect();
    if live.is_empty() {
        return None;
    }
    let n = live.len();
    let mut f: f64 = live.iter().map(|&(_, d)| d).sum();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &(_, d)) in live.iter().enumerate() {
        let g = f / (n - i) as f64;
        if g > best.1 + 1e-9 * best.1.abs().max(1.0) || best.1 == f64::NEG_INFINITY {
            best = (i, g);
        }
        f -= d;
    }
    let mut vertices: Vec<VertexId> = live[best.0..].iter().map(|&(v, _)| v).collect();
    vertices.sort_unstable();
    Some((vertices, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn triangle_and_edge() -> DynamicGraph {
        let mut g = DynamicGraph::with_vertices(5);
        g.add_edge(v(0), v(1), 1.0).unwrap();
        g.add_edge(v(1), v(2), 1.0).unwrap();
        g.add_edge(v(2), v(0), 1.0).unwrap();
        g.add_edge(v(3), v(4), 1.0).unwrap();
        g
    }

    #[test]
    fn triangle_then_edge() {
        for removal in [Removal::Repeel, Removal::Incremental] {
            let got = enumerate_dense(&triangle_and_edge(), 2, removal).unwrap();
            assert_eq!(got.len(), 2);
            assert_eq!(got[0].vertices, vec![v(0), v(1), v(2)]);
            assert_eq!(got[0].density, 1.0);
            assert_eq!(got[1].vertices, vec![v(3), v(4)]);
            assert_eq!(got[1].density, 0.5);
        }
    }

    #[test]
    fn empty_graph_yields_nothing() {
        for removal in [Removal::Repeel, Removal::Incremental] {
            assert!(enumerate_dense(&DynamicGraph::new(), 3, removal).unwrap().is_empty());
        }
    }

    #[test]
    fn tied_triangles_come_out_together() {
        let mut g = DynamicGraph::with_vertices(6);
        for base in [0u32, 3] {
            g.add_edge(v(base), v(base + 1), 1.0).unwrap();
            g.add_edge(v(base + 1), v(base + 2), 1.0).unwrap();
            g.add_edge(v(base + 2), v(base), 1.0).unwrap();
        }
        for removal in [Removal::Repeel, Removal::Incremental] {
            let got = enumerate_dense(&g, 1, removal).unwrap();
            assert_eq!(got.len(), 1);
            assert_eq!(got[0].vertices.len(), 6);
            assert_eq!(got[0].density, 1.0);
        }
    }

    #[test]
    fn stops_when_only_isolated_vertices_remain() {
        let got = enumerate_dense(&triangle_and_edge(), 10, Removal::Repeel).unwrap();
        assert_eq!(got.len(), 2);
    }
}
