use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spade_core::oracle::{gen_random, WeightLaw};
use spade_core::{peel, DynamicGraph, GraphDelta, PeelingSequence, Reorderer, VertexId};

fn assert_same(g: &DynamicGraph, seq: &PeelingSequence, what: &str) {
    let (fresh, det) = peel(g);
    assert_eq!(seq.order(), fresh.order(), "{what}: order");
    assert_eq!(seq.deltas(), fresh.deltas(), "{what}: deltas");
    assert_eq!(seq.detect(Default::default()).community, det.community, "{what}: community");
    seq.audit().unwrap();
}

fn random_pair(n: usize, rng: &mut impl Rng) -> (VertexId, VertexId) {
    loop {
        let s = rng.gen_range(0..n);
        let d = rng.gen_range(0..n);
        if s != d {
            return (VertexId::from(s), VertexId::from(d));
        }
    }
}

/// Random interleaving of single insertions, batches and deletions, checked
/// against a fresh peel after every step.
fn mixed_run(seed: u64, n: usize, m: usize, steps: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = gen_random(n, m, WeightLaw::Integer { lo: 1, hi: 4 }, seed).unwrap();
    let (mut seq, _) = peel(&g);
    let mut r = Reorderer::new();
    r.check_head_optimality = true;
    for step in 0..steps {
        let what = format!("seed {seed} step {step}");
        match rng.gen_range(0..3) {
            0 => {
                let (s, d) = random_pair(n, &mut rng);
                let c = rng.gen_range(1..=4) as f64;
                g.add_edge(s, d, c).unwrap();
                r.insert_edge_reorder(&g, &mut seq, s, d).unwrap();
            }
            1 => {
                let mut delta = GraphDelta::new();
                for _ in 0..rng.gen_range(1..5) {
                    let (s, d) = random_pair(n, &mut rng);
                    let c = rng.gen_range(1..=4) as f64;
                    g.add_edge(s, d, c).unwrap();
                    delta.push_insert(s, d, c).unwrap();
                }
                r.insert_batch_reorder(&g, &mut seq, &delta).unwrap();
            }
            _ => {
                let edges: Vec<_> = g.edges().collect();
                if edges.is_empty() {
                    continue;
                }
                let (s, d, w) = edges[rng.gen_range(0..edges.len())];
                if w > 1.0 && rng.gen_bool(0.5) {
                    g.delete_edge(s, d, (w - 1.0).floor().max(1.0)).unwrap();
                } else {
                    g.remove_edge(s, d).unwrap();
                }
                r.delete_edge_reorder(&g, &mut seq, s, d).unwrap();
            }
        }
        assert_same(&g, &seq, &what);
    }
    assert_eq!(r.head_violations(), 0, "seed {seed}");
}

#[test]
fn mixed_updates_small_graphs() {
    for seed in 0..150 {
        let n = 3 + (seed as usize % 10);
        let m = (seed as usize * 7) % (n * (n - 1) / 2 + 1);
        mixed_run(seed, n, m, 25);
    }
}

#[test]
fn mixed_updates_medium_graphs() {
    for seed in 1000..1010 {
        mixed_run(seed, 60, 200, 60);
    }
}

#[test]
fn insert_then_delete_restores_sequence() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4 + seed as usize % 12;
        let mut g = gen_random(n, 2 * n, WeightLaw::default(), seed).unwrap();
        let (mut seq, _) = peel(&g);
        let before = (seq.order(), seq.deltas());
        let (s, d) = random_pair(n, &mut rng);
        let c = rng.gen_range(1..=10) as f64;
        let mut r = Reorderer::new();
        g.add_edge(s, d, c).unwrap();
        r.insert_edge_reorder(&g, &mut seq, s, d).unwrap();
        g.delete_edge(s, d, c).unwrap();
        r.delete_edge_reorder(&g, &mut seq, s, d).unwrap();
        assert_eq!((seq.order(), seq.deltas()), before, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn batch_equals_sequential_and_static(
        n in 2usize..15,
        base in prop::collection::vec((0usize..15, 0usize..15, 1u8..6), 0..30),
        batch in prop::collection::vec((0usize..15, 0usize..15, 1u8..6), 1..12),
    ) {
        let mut g = DynamicGraph::with_vertices(n);
        for (s, d, c) in base {
            let (s, d) = (s % n, d % n);
            if s != d {
                g.add_edge(VertexId::from(s), VertexId::from(d), c as f64).unwrap();
            }
        }
        let (seq0, _) = peel(&g);
        let mut seq_one = seq0.clone();
        let mut seq_batch = seq0;
        let mut g_one = g.clone();
        let mut r = Reorderer::new();
        let mut delta = GraphDelta::new();
        for (s, d, c) in batch {
            let (s, d) = (VertexId::from(s % n), VertexId::from(d % n));
            if s == d {
                continue;
            }
            g_one.add_edge(s, d, c as f64).unwrap();
            r.insert_edge_reorder(&g_one, &mut seq_one, s, d).unwrap();
            g.add_edge(s, d, c as f64).unwrap();
            delta.push_insert(s, d, c as f64).unwrap();
        }
        r.insert_batch_reorder(&g, &mut seq_batch, &delta).unwrap();
        let (fresh, _) = peel(&g);
        prop_assert_eq!(seq_batch.order(), fresh.order());
        prop_assert_eq!(seq_one.order(), fresh.order());
        prop_assert_eq!(seq_batch.deltas(), fresh.deltas());
    }
}
