//! Timing incremental updates against a full re-peel on a power-law graph.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::graph::{GraphDelta, VertexId};
use crate::model::Metric;
use crate::oracle::{gen_with, DegreeLaw, GenOptions, PowerLawSampler, WeightLaw};
use crate::peel::peel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub vertices: usize,
    pub edges: usize,
    pub exponent: f64,
    /// Single-edge insertions to time.
    pub updates: usize,
    pub batch_size: usize,
    /// Batches to time.
    pub batches: usize,
    /// Full re-peels to time.
    pub static_runs: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            vertices: 20_000,
            edges: 100_000,
            exponent: 2.5,
            updates: 1000,
            batch_size: 1000,
            batches: 5,
            static_runs: 5,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub count: usize,
    pub median_us: f64,
    pub mean_us: f64,
    pub p90_us: f64,
    pub max_us: f64,
}

impl Sample {
    pub fn of(mut us: Vec<f64>) -> Self {
        if us.is_empty() {
            return Sample::default();
        }
        us.sort_by(f64::total_cmp);
        let n = us.len();
        let median = if n % 2 == 1 {
            us[n / 2]
        } else {
            (us[n / 2 - 1] + us[n / 2]) / 2.0
        };
        Sample {
            count: n,
            median_us: median,
            mean_us: us.iter().sum::<f64>() / n as f64,
            p90_us: us[((n as f64 * 0.9).ceil() as usize).clamp(1, n) - 1],
            max_us: us[n - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub vertices: usize,
    pub edges: usize,
    pub static_peel: Sample,
    pub single_edge: Sample,
    pub batch_size: usize,
    /// Per-batch time divided by the batch size.
    pub batch_per_edge: Sample,
    /// Static median over single-edge median.
    pub speedup_median: f64,
    pub mean_touched_vertices: f64,
}

fn micros(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

pub fn speedup_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.vertices < 2 || cfg.updates == 0 || cfg.batch_size == 0 || cfg.static_runs == 0 {
        return Err(Error::InvalidConfig("benchmark sizes must be positive".into()));
    }
    let opts = GenOptions {
        weights: WeightLaw::default(),
        degrees: DegreeLaw::PowerLaw {
            exponent: cfg.exponent,
        },
        max_vertex_weight: None,
    };
    let graph = gen_with(cfg.vertices, cfg.edges, &opts, cfg.seed)?;

    let mut static_us = Vec::with_capacity(cfg.static_runs);
    for _ in 0..cfg.static_runs {
        let t = Instant::now();
        let run = peel(&graph);
        static_us.push(micros(t));
        std::hint::black_box(run);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let sampler = PowerLawSampler::new(cfg.vertices, cfg.exponent, &mut rng);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let s = sampler.draw(rng);
        let d = sampler.draw(rng);
        if s != d {
            return (VertexId::from(s), VertexId::from(d), rng.gen_range(1..=10) as f64);
        }
    };

    let mut engine = Engine::from_graph(graph, Metric::Dw);
    let mut single_us = Vec::with_capacity(cfg.updates);
    let mut touched = 0usize;
    for _ in 0..cfg.updates {
        let (s, d, c) = draw(&mut rng);
        let t = Instant::now();
        let stats = engine.insert_edge_ids(s, d, c)?;
        single_us.push(micros(t));
        touched += stats.touched_vertices;
    }

    let mut batch_us = Vec::with_capacity(cfg.batches);
    for _ in 0..cfg.batches {
        let mut delta = GraphDelta::new();
        for _ in 0..cfg.batch_size {
            let (s, d, c) = draw(&mut rng);
            delta.push_insert(s, d, c)?;
        }
        let t = Instant::now();
        engine.insert_batch_ids(&delta)?;
        batch_us.push(micros(t) / cfg.batch_size as f64);
    }

    let static_peel = Sample::of(static_us);
    let single_edge = Sample::of(single_us);
    Ok(BenchReport {
        vertices: cfg.vertices,
        edges: cfg.edges,
        speedup_median: static_peel.median_us / single_edge.median_us.max(1e-3),
        static_peel,
        single_edge,
        batch_size: cfg.batch_size,
        batch_per_edge: Sample::of(batch_us),
        mean_touched_vertices: touched as f64 / cfg.updates as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        let s = Sample::of(vec![4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.count, s.median_us, s.mean_us, s.max_us), (4, 2.5, 2.5, 4.0));
        assert_eq!(Sample::of(vec![]).count, 0);
    }

    #[test]
    fn small_bench_runs() {
        let cfg = BenchConfig {
            vertices: 300,
            edges: 1500,
            updates: 20,
            batch_size: 10,
            batches: 2,
            static_runs: 2,
            ..BenchConfig::default()
        };
        let r = speedup_bench(&cfg).unwrap();
        assert_eq!(r.single_edge.count, 20);
        assert_eq!(r.batch_per_edge.count, 2);
        assert!(r.speedup_median > 0.0);
    }
}
