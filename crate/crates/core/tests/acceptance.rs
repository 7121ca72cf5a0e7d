//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use spade_core::bench::{speedup_bench, BenchConfig};
use spade_core::engine::Engine;
use spade_core::grouping::{EdgeClass, FlushReason};
use spade_core::stream::{
    prevention_ratio, replay, synthetic_stream, ReorderTrigger, total_latency, ClockMode, ReplayConfig, ReplayMode,
    StreamEvent, SyntheticOptions,
};
use spade_core::verify::{self, SuiteResult};
use spade_core::{peel, Metric};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn suites(results: &[SuiteResult]) -> Outcome {
    let pass = results.iter().all(SuiteResult::ok);
    let mut detail: Vec<String> = results
        .iter()
        .map(|s| format!("{} {}/{}", s.name, s.passed, s.cases))
        .collect();
    for s in results.iter().filter(|s| !s.ok()) {
        detail.extend(s.failures.iter().take(2).cloned());
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn within(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let fast = elapsed < limit;
    Outcome {
        pass: outcome.pass && fast,
        detail: format!("{}; {:.1}s (limit {}s)", outcome.detail, elapsed.as_secs_f64(), limit.as_secs()),
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let r = verify::insertion_suite(SEED, 1000, 20);
    within(suites(&[r]), t.elapsed(), Duration::from_secs(60))
}

fn criterion_2() -> Outcome {
    suites(&[verify::batch_suite(SEED + 1, 1000, &[1, 10, 100])])
}

fn criterion_3() -> Outcome {
    suites(&[
        verify::deletion_suite(SEED + 2, 500),
        verify::round_trip_suite(SEED + 3, 500),
    ])
}

fn criterion_4() -> Outcome {
    suites(&[
        verify::approximation_suite(SEED + 4, 200, Metric::Dg),
        verify::approximation_suite(SEED + 5, 200, Metric::Dw),
        verify::approximation_suite(SEED + 6, 200, Metric::fd(5.0).unwrap()),
    ])
}

fn criterion_5() -> Outcome {
    suites(&[verify::benign_suite(SEED + 7, 500)])
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let cfg = BenchConfig {
        vertices: 20_000,
        edges: 100_000,
        exponent: 2.5,
        updates: 1000,
        batch_size: 1000,
        batches: 5,
        static_runs: 5,
        seed: SEED,
    };
    let r = match speedup_bench(&cfg) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    let speedup_ok = r.speedup_median >= 100.0;
    let batch_ok = r.batch_per_edge.mean_us <= r.single_edge.mean_us;
    let detail = format!(
        "{} edges; static median {:.0}us; single-edge median {:.2}us mean {:.2}us; speedup {:.0}x; batch({}) per-edge mean {:.2}us",
        r.edges,
        r.static_peel.median_us,
        r.single_edge.median_us,
        r.single_edge.mean_us,
        r.speedup_median,
        r.batch_size,
        r.batch_per_edge.mean_us,
    );
    within(
        Outcome {
            pass: speedup_ok && batch_ok && r.edges >= 100_000,
            detail,
        },
        t.elapsed(),
        Duration::from_secs(300),
    )
}

fn early_burst() -> SyntheticOptions {
    SyntheticOptions {
        fraud_edges: 150,
        fraud_start: 0.05,
        ..SyntheticOptions::default()
    }
}

fn grouping_matches_batch(metric: Metric) -> Result<String, String> {
    let stream = synthetic_stream(&early_burst(), SEED).map_err(|e| e.to_string())?;
    let mut grouped = Engine::new(metric);
    let mut batched = Engine::new(metric);
    let mut flushes = 0usize;
    let mut benign = 0usize;
    for (i, e) in stream.events.iter().enumerate() {
        let sub = grouped
            .submit_edge(&e.src, &e.dst, e.weight, e.timestamp)
            .map_err(|e| e.to_string())?;
        batched
            .stage_edge(&e.src, &e.dst, e.weight, e.timestamp)
            .map_err(|e| e.to_string())?;
        match (sub.class, sub.flush) {
            (EdgeClass::Benign, None) => benign += 1,
            (EdgeClass::Urgent, Some(f)) => {
                if f.reason != FlushReason::Urgent {
                    return Err(format!("event {i}: flush reason {:?}", f.reason));
                }
                flushes += 1;
                batched.commit().map_err(|e| e.to_string())?;
                if grouped.sequence().order() != batched.sequence().order()
                    || grouped.sequence().deltas() != batched.sequence().deltas()
                {
                    return Err(format!("event {i}: grouped sequence differs from batched"));
                }
                let (g, b) = (grouped.detect(), batched.detect());
                if g.community != b.community || g.density != b.density {
                    return Err(format!("event {i}: grouped detection differs from batched"));
                }
            }
            (class, flush) => {
                return Err(format!("event {i}: {class:?} edge with flush {:?}", flush.map(|f| f.reason)))
            }
        }
    }
    let last = grouped.flush().map_err(|e| e.to_string())?;
    batched.commit().map_err(|e| e.to_string())?;
    let (_, fresh) = peel(grouped.graph());
    if last.detection.community != fresh.community || batched.detect().community != fresh.community {
        return Err("final detection differs from a static peel".into());
    }
    if benign == 0 || flushes == 0 {
        return Err(format!("degenerate stream: {benign} benign, {flushes} flushes"));
    }
    Ok(format!("{metric}: {} events, {flushes} urgent flushes, {benign} deferred", stream.len()))
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for metric in [Metric::Dg, Metric::Dw, Metric::fd(5.0).unwrap()] {
        match grouping_matches_batch(metric) {
            Ok(s) => notes.push(s),
            Err(e) => {
                pass = false;
                notes.push(e);
            }
        }
    }

    let stream = synthetic_stream(&early_burst(), SEED + 1).unwrap();
    let cfg = ReplayConfig {
        metric: Metric::Dw,
        mode: ReplayMode::Group,
        init_fraction: 0.8,
        clock: ClockMode::Logical,
        ..ReplayConfig::default()
    };
    let report = replay(&stream, &cfg).unwrap();
    let only_urgent = report
        .reorders
        .iter()
        .all(|r| matches!(r.trigger, ReorderTrigger::Urgent | ReorderTrigger::Terminal));
    pass &= only_urgent;
    notes.push(format!("replay: {} reorders, urgent-only {only_urgent}", report.reorders.len()));

    let six: Vec<StreamEvent> = (1..=6).map(|t| StreamEvent::new("f", "m", 1.0, t).fraud()).collect();
    let r = prevention_ratio(&six, 3.5, None).unwrap();
    pass &= r == 0.5;
    let l = total_latency([(1, 5.0), (2, 5.0), (3, 5.0)]);
    pass &= l == 9.0;
    notes.push(format!("R = {r}, L = {l}"));
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_8() -> Outcome {
    suites(&[
        verify::structural_suite(SEED + 8, 1000),
        verify::axiom_suite(SEED + 9, 300),
    ])
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle sequence equivalence", criterion_1),
        ("batch equivalence", criterion_2),
        ("deletion equivalence", criterion_3),
        ("half approximation", criterion_4),
        ("benign edge properties", criterion_5),
        ("desk-scale speedup", criterion_6),
        ("grouping fidelity", criterion_7),
        ("structural invariants", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {verdict} ({:.1}s) {}",
            i + 1,
            t.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
