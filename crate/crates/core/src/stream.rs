//! Timestamped update streams, replay under the different update modes, and
//! the latency and prevention-ratio metrics.
//!
//! Replay runs on a simulated clock: an event covered by a reorder starts
//! being served at `τ_s = max(clock, τ_trigger)`, where `τ_trigger` is the
//! timestamp of the event that caused the reorder, and completes at
//! `τ_r = τ_s + compute`. With [`ClockMode::Logical`] compute time counts as
//! zero, which makes reports fully reproducible.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::grouping::{FlushPolicy, FlushReason};
use crate::model::Metric;
use crate::oracle::PowerLawSampler;
use crate::peel::{DetectionResult, ReorderStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub src: String,
    pub dst: String,
    pub weight: f64,
    /// Microseconds.
    pub timestamp: i64,
    pub fraud: bool,
}

impl StreamEvent {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64, timestamp: i64) -> Self {
        StreamEvent {
            src: src.into(),
            dst: dst.into(),
            weight,
            timestamp,
            fraud: false,
        }
    }

    pub fn fraud(mut self) -> Self {
        self.fraud = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateStream {
    pub events: Vec<StreamEvent>,
    /// Whether timestamps are required to be non-decreasing.
    pub monotone: bool,
}

impl UpdateStream {
    /// A stream that requires non-decreasing timestamps.
    pub fn new(events: Vec<StreamEvent>) -> Self {
        UpdateStream {
            events,
            monotone: true,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.monotone {
            return Ok(());
        }
        for (i, w) in self.events.windows(2).enumerate() {
            if w[1].timestamp < w[0].timestamp {
                return Err(Error::TimestampOrder {
                    index: i + 1,
                    previous: w[0].timestamp,
                    found: w[1].timestamp,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "n")]
pub enum ReplayMode {
    /// Full re-peel every `n` events.
    Static(usize),
    /// One reorder per event.
    Inc,
    /// One batched reorder every `n` events.
    Batch(usize),
    /// Edge grouping: reorder only on urgent edges or when the flush policy
    /// fires.
    Group,
}

impl fmt::Display for ReplayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayMode::Static(n) => write!(f, "static({n})"),
            ReplayMode::Inc => f.write_str("inc"),
            ReplayMode::Batch(n) => write!(f, "batch({n})"),
            ReplayMode::Group => f.write_str("group"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Wall-clock compute time is added to the simulated clock.
    #[default]
    Measured,
    /// Compute takes no simulated time.
    Logical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    pub metric: Metric,
    pub mode: ReplayMode,
    /// Fraction of events forming the initial graph.
    pub init_fraction: f64,
    pub flush: FlushPolicy,
    pub clock: ClockMode,
    pub priors: HashMap<String, f64>,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            metric: Metric::Dg,
            mode: ReplayMode::Inc,
            init_fraction: 0.9,
            flush: FlushPolicy::default(),
            clock: ClockMode::Measured,
            priors: HashMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub community: Vec<String>,
    pub density: f64,
    pub prefix_index: usize,
}

impl CommunityReport {
    pub fn from_detection(engine: &Engine, det: &DetectionResult) -> Self {
        let mut community: Vec<String> = det
            .community
            .iter()
            .map(|&v| engine.graph().label(v).to_string())
            .collect();
        community.sort();
        CommunityReport {
            community,
            density: det.density,
            prefix_index: det.prefix_index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionLogEntry {
    pub time_us: f64,
    /// Index into the stream of the last event the detection covers.
    pub after_event: usize,
    pub community: Vec<String>,
    pub density: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReorderTrigger {
    Event,
    BatchFull,
    Urgent,
    Size,
    Age,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorderRecord {
    pub after_event: usize,
    pub edges: usize,
    pub trigger: ReorderTrigger,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub fraud_events: usize,
    pub total_us: f64,
    pub mean_us: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub queueing_us: f64,
    pub compute_us: f64,
    pub mean_queueing_us: f64,
    pub mean_compute_us: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub touched_vertices: usize,
    pub touched_edges: usize,
    pub max_touched_vertices: usize,
    pub elapsed_us: u64,
}

impl StatsSummary {
    fn add(&mut self, s: &ReorderStats) {
        self.touched_vertices += s.touched_vertices;
        self.touched_edges += s.touched_edges;
        self.max_touched_vertices = self.max_touched_vertices.max(s.touched_vertices);
        self.elapsed_us += s.elapsed.as_micros() as u64;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub mode: String,
    pub metric: String,
    pub events: usize,
    pub initial_events: usize,
    pub live_events: usize,
    pub vertices: usize,
    pub edges: usize,
    pub final_detection: CommunityReport,
    pub detections: Vec<DetectionLogEntry>,
    pub reorders: Vec<ReorderRecord>,
    /// `τ_r` of each live event, in stream order.
    pub response_us: Vec<f64>,
    pub latency: LatencySummary,
    /// First time a reported community touched a fraud-labeled event.
    pub detection_time_us: Option<f64>,
    pub prevention_ratio: Option<f64>,
    pub timing: TimingBreakdown,
    pub stats: StatsSummary,
}

/// Sum of `τ_r - τ_i` over pairs with `τ_r >= τ_i`.
pub fn total_latency(pairs: impl IntoIterator<Item = (i64, f64)>) -> f64 {
    pairs
        .into_iter()
        .filter(|&(ti, tr)| tr >= ti as f64)
        .map(|(ti, tr)| tr - ti as f64)
        .sum()
}

/// Fraction of fraud-labeled events arriving strictly after `tau_f`. With
/// `fraudsters` given, only labeled events with an endpoint in the set count.
pub fn prevention_ratio(
    events: &[StreamEvent],
    tau_f: f64,
    fraudsters: Option<&HashSet<String>>,
) -> Result<f64> {
    let mut labeled = 0usize;
    let mut prevented = 0usize;
    for e in events.iter().filter(|e| e.fraud) {
        if let Some(set) = fraudsters {
            if !set.contains(&e.src) && !set.contains(&e.dst) {
                continue;
            }
        }
        labeled += 1;
        if e.timestamp as f64 > tau_f {
            prevented += 1;
        }
    }
    if labeled == 0 {
        return Err(Error::NoLabeledEvents);
    }
    Ok(prevented as f64 / labeled as f64)
}

struct Replayer<'a> {
    events: &'a [StreamEvent],
    clock_mode: ClockMode,
    engine: Engine,
    clock: Option<f64>,
    response: Vec<f64>,
    first_live: usize,
    queueing: f64,
    compute: f64,
    stats: StatsSummary,
    log: Vec<DetectionLogEntry>,
    last: Option<(Vec<String>, f64)>,
    reorders: Vec<ReorderRecord>,
}

impl Replayer<'_> {
    /// Marks `covered` live events as served by one reorder triggered by
    /// event `trigger`.
    fn complete(
        &mut self,
        covered: &[usize],
        trigger: usize,
        kind: ReorderTrigger,
        compute: Duration,
        stats: ReorderStats,
    ) {
        let tau = self.events[trigger].timestamp as f64;
        let start = self.clock.map_or(tau, |c| c.max(tau));
        let spent = match self.clock_mode {
            ClockMode::Measured => compute.as_secs_f64() * 1e6,
            ClockMode::Logical => 0.0,
        };
        let finish = start + spent;
        self.clock = Some(finish);
        for &i in covered {
            self.response[i - self.first_live] = finish;
            self.queueing += start - self.events[i].timestamp as f64;
            self.compute += spent;
        }
        self.stats.add(&stats);
        self.reorders.push(ReorderRecord {
            after_event: trigger,
            edges: covered.len(),
            trigger: kind,
        });
        self.log_detection(finish, trigger);
    }

    fn log_detection(&mut self, time: f64, after: usize) {
        let det = self.engine.detect();
        let report = CommunityReport::from_detection(&self.engine, &det);
        let key = (report.community, report.density);
        if self.last.as_ref() != Some(&key) {
            self.log.push(DetectionLogEntry {
                time_us: time,
                after_event: after,
                community: key.0.clone(),
                density: key.1,
            });
            self.last = Some(key);
        }
    }
}

/// Replays `stream`: the first `init_fraction` of events form the initial
/// graph (peeled statically), the rest are applied according to the mode.
/// Anything still pending at the end is applied by a terminal reorder.
pub fn replay(stream: &UpdateStream, config: &ReplayConfig) -> Result<ReplayReport> {
    stream.validate()?;
    if !(0.0..=1.0).contains(&config.init_fraction) {
        return Err(Error::InvalidConfig(format!(
            "init fraction must lie in [0, 1], got {}",
            config.init_fraction
        )));
    }
    match config.mode {
        ReplayMode::Static(0) | ReplayMode::Batch(0) => {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()))
        }
        _ => {}
    }
    let events = &stream.events;
    let split = ((events.len() as f64) * config.init_fraction).floor() as usize;
    let mut engine = Engine::new(config.metric)
        .with_priors(config.priors.clone())
        .with_flush_policy(config.flush);
    for e in &events[..split] {
        engine.stage_edge(&e.src, &e.dst, e.weight, e.timestamp)?;
    }
    engine.rebuild();

    let mut r = Replayer {
        events,
        clock_mode: config.clock,
        engine,
        clock: split.checked_sub(1).map(|i| events[i].timestamp as f64),
        response: vec![0.0; events.len() - split],
        first_live: split,
        queueing: 0.0,
        compute: 0.0,
        stats: StatsSummary::default(),
        log: Vec::new(),
        last: Some((Vec::new(), 0.0)),
        reorders: Vec::new(),
    };
    if split > 0 {
        let t = r.clock.expect("initial events");
        r.log_detection(t, split - 1);
    }

    let mut pending: Vec<usize> = Vec::new();
    for i in split..events.len() {
        let e = &events[i];
        match config.mode {
            ReplayMode::Inc => {
                let t = Instant::now();
                let stats = r.engine.insert_edge(&e.src, &e.dst, e.weight)?;
                r.complete(&[i], i, ReorderTrigger::Event, t.elapsed(), stats);
            }
            ReplayMode::Batch(n) | ReplayMode::Static(n) => {
                let t = Instant::now();
                r.engine.stage_edge(&e.src, &e.dst, e.weight, e.timestamp)?;
                pending.push(i);
                if pending.len() == n {
                    let stats = apply_pending(&mut r.engine, config.mode)?;
                    r.complete(&pending, i, ReorderTrigger::BatchFull, t.elapsed(), stats);
                    pending.clear();
                }
            }
            ReplayMode::Group => {
                let t = Instant::now();
                let sub = r.engine.submit_edge(&e.src, &e.dst, e.weight, e.timestamp)?;
                pending.push(i);
                if let Some(flush) = sub.flush {
                    let kind = match flush.reason {
                        FlushReason::Urgent => ReorderTrigger::Urgent,
                        FlushReason::Size => ReorderTrigger::Size,
                        FlushReason::Age => ReorderTrigger::Age,
                        FlushReason::Manual => ReorderTrigger::Terminal,
                    };
                    let stats = r.engine.last_stats();
                    r.complete(&pending, i, kind, t.elapsed(), stats);
                    pending.clear();
                }
            }
        }
    }
    if let Some(&last) = pending.last() {
        let t = Instant::now();
        let stats = apply_pending(&mut r.engine, config.mode)?;
        let covered = std::mem::take(&mut pending);
        r.complete(&covered, last, ReorderTrigger::Terminal, t.elapsed(), stats);
    }

    let live = &events[split..];
    let labeled: Vec<(i64, f64)> = live
        .iter()
        .zip(&r.response)
        .filter(|(e, _)| e.fraud)
        .map(|(e, &tr)| (e.timestamp, tr))
        .collect();
    let total = total_latency(labeled.iter().copied());
    let fraudsters: HashSet<String> = events
        .iter()
        .filter(|e| e.fraud)
        .flat_map(|e| [e.src.clone(), e.dst.clone()])
        .collect();
    let detection_time_us = r
        .log
        .iter()
        .find(|d| d.community.iter().any(|v| fraudsters.contains(v)))
        .map(|d| d.time_us);
    let prevention = if labeled.is_empty() {
        None
    } else {
        Some(prevention_ratio(
            live,
            detection_time_us.unwrap_or(f64::INFINITY),
            Some(&fraudsters),
        )?)
    };
    let n_live = live.len();
    let final_det = r.engine.detect();
    Ok(ReplayReport {
        mode: config.mode.to_string(),
        metric: config.metric.to_string(),
        events: events.len(),
        initial_events: split,
        live_events: n_live,
        vertices: r.engine.graph().vertex_count(),
        edges: r.engine.graph().edge_count(),
        final_detection: CommunityReport::from_detection(&r.engine, &final_det),
        detections: r.log,
        reorders: r.reorders,
        response_us: r.response,
        latency: LatencySummary {
            fraud_events: labeled.len(),
            total_us: total,
            mean_us: if labeled.is_empty() { 0.0 } else { total / labeled.len() as f64 },
        },
        detection_time_us,
        prevention_ratio: prevention,
        timing: TimingBreakdown {
            queueing_us: r.queueing,
            compute_us: r.compute,
            mean_queueing_us: if n_live == 0 { 0.0 } else { r.queueing / n_live as f64 },
            mean_compute_us: if n_live == 0 { 0.0 } else { r.compute / n_live as f64 },
        },
        stats: r.stats,
    })
}

fn apply_pending(engine: &mut Engine, mode: ReplayMode) -> Result<ReorderStats> {
    match mode {
        ReplayMode::Static(_) => {
            engine.rebuild();
            Ok(engine.last_stats())
        }
        ReplayMode::Group => {
            engine.flush()?;
            Ok(engine.last_stats())
        }
        _ => engine.commit(),
    }
}

/// Shape of a generated labeled stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOptions {
    pub users: usize,
    pub merchants: usize,
    pub background_edges: usize,
    /// Power-law exponent for background endpoint popularity.
    pub exponent: f64,
    pub fraud_users: usize,
    pub fraud_merchants: usize,
    pub fraud_edges: usize,
    /// Position (as a fraction of the stream) where the fraud burst begins.
    pub fraud_start: f64,
    /// Largest raw weight; weights are integers drawn from `1..=max_weight`.
    pub max_weight: u32,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            users: 500,
            merchants: 200,
            background_edges: 3000,
            exponent: 2.5,
            fraud_users: 12,
            fraud_merchants: 6,
            fraud_edges: 60,
            fraud_start: 0.85,
            max_weight: 10,
        }
    }
}

/// Bipartite user→merchant transactions with power-law background traffic
/// and a burst of fraud-labeled transactions between a small set of fresh
/// users and merchants. Timestamps advance by 1..=10 µs per event.
pub fn synthetic_stream(opts: &SyntheticOptions, seed: u64) -> Result<UpdateStream> {
    if opts.users == 0 || opts.merchants == 0 {
        return Err(Error::InvalidConfig("need at least one user and one merchant".into()));
    }
    if opts.fraud_edges > 0 && (opts.fraud_users == 0 || opts.fraud_merchants == 0) {
        return Err(Error::InvalidConfig("fraud edges need fraud users and merchants".into()));
    }
    if opts.max_weight == 0 || !(opts.exponent > 1.0) || !(0.0..=1.0).contains(&opts.fraud_start) {
        return Err(Error::InvalidConfig("bad synthetic stream options".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = PowerLawSampler::new(opts.users, opts.exponent, &mut rng);
    let merchants = PowerLawSampler::new(opts.merchants, opts.exponent, &mut rng);
    let weight = |rng: &mut ChaCha8Rng| rng.gen_range(1..=opts.max_weight) as f64;

    let mut background: Vec<StreamEvent> = (0..opts.background_edges)
        .map(|_| {
            let u = users.draw(&mut rng);
            let m = merchants.draw(&mut rng);
            StreamEvent::new(format!("u{u}"), format!("m{m}"), weight(&mut rng), 0)
        })
        .collect();
    let fraud: Vec<StreamEvent> = (0..opts.fraud_edges)
        .map(|_| {
            let u = rng.gen_range(0..opts.fraud_users);
            let m = rng.gen_range(0..opts.fraud_merchants);
            StreamEvent::new(format!("fu{u}"), format!("fm{m}"), weight(&mut rng), 0).fraud()
        })
        .collect();

    let total = background.len() + fraud.len();
    let start = ((total as f64) * opts.fraud_start).floor() as usize;
    let start = start.min(background.len());
    let mut events: Vec<StreamEvent> = background.drain(..start).collect();
    // Interleave the fraud burst with the remaining background traffic.
    let mut fraud = fraud.into_iter().peekable();
    let mut rest = background.into_iter().peekable();
    while fraud.peek().is_some() || rest.peek().is_some() {
        let take_fraud = match (fraud.peek(), rest.peek()) {
            (Some(_), Some(_)) => rng.gen_bool(0.5),
            (Some(_), None) => true,
            _ => false,
        };
        let next = if take_fraud { fraud.next() } else { rest.next() };
        events.extend(next);
    }
    let mut t = 0i64;
    for e in &mut events {
        t += rng.gen_range(1..=10);
        e.timestamp = t;
    }
    Ok(UpdateStream::new(events))
}
