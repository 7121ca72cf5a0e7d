use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spade_core::bench::{speedup_bench, BenchConfig};
use spade_core::enumerate::{enumerate_dense, Removal};
use spade_core::io::{self, report_json};
use spade_core::oracle::{gen_with, DegreeLaw, GenOptions, WeightLaw};
use spade_core::peel::ReorderStats;
use spade_core::stream::{
    replay, synthetic_stream, ClockMode, CommunityReport, ReplayConfig, ReplayMode, StreamEvent,
    SyntheticOptions, UpdateStream,
};
use spade_core::verify::verify_all;
use spade_core::window::{Window, WindowCase, WindowIndex};
use spade_core::{Engine, Error, FlushPolicy, Metric};

#[derive(Parser, Debug)]
#[command(name = "spade", version, about = "Incremental dense-subgraph detection on edge streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Peel the whole stream as one static graph.
    Detect(DetectArgs),
    /// Replay a stream through one of the update modes.
    Replay(ReplayArgs),
    /// List the top-k vertex-disjoint dense communities.
    Enumerate(EnumerateArgs),
    /// Detect on a target time window, starting from a baseline window.
    Window(WindowArgs),
    /// Run the randomized property suites against the oracle.
    Verify(VerifyArgs),
    /// Generate a random stream file.
    Gen(GenArgs),
    /// Time incremental updates against a static re-peel.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Edge suspiciousness metric.
    #[arg(long, value_enum, default_value_t = MetricArg::Dg)]
    metric: MetricArg,
    /// Constant c of the fd metric, 1 / ln(x + c).
    #[arg(long, default_value_t = 5.0)]
    fd_c: f64,
    /// Side file of `label<TAB>a` vertex priors.
    #[arg(long)]
    vertex_weights: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Common {
    fn metric(&self) -> Result<Metric, Error> {
        match self.metric {
            MetricArg::Dg => Ok(Metric::Dg),
            MetricArg::Dw => Ok(Metric::Dw),
            MetricArg::Fd => Metric::fd(self.fd_c),
        }
    }

    fn priors(&self) -> Result<std::collections::HashMap<String, f64>, Error> {
        match &self.vertex_weights {
            Some(p) => io::parse_vertex_weights(p),
            None => Ok(Default::default()),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Dg,
    Dw,
    Fd,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Static,
    Inc,
    Batch,
    Group,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClockArg {
    Measured,
    Logical,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Inc)]
    mode: ModeArg,
    /// Events per reorder in batch mode, per re-peel in static mode.
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    /// Fraction of the stream used as the initial graph.
    #[arg(long, default_value_t = 0.9)]
    init_fraction: f64,
    /// Group mode: flush once this many edges are buffered.
    #[arg(long)]
    flush_max_size: Option<usize>,
    /// Group mode: flush once the oldest buffered edge is this many
    /// microseconds old.
    #[arg(long)]
    flush_max_age: Option<i64>,
    /// `logical` charges no simulated time for computation.
    #[arg(long, value_enum, default_value_t = ClockArg::Measured)]
    clock: ClockArg,
    /// Accept timestamps that go backwards.
    #[arg(long)]
    allow_unordered: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RemovalArg {
    Repeel,
    Incremental,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value_t = RemovalArg::Repeel)]
    removal: RemovalArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    base_start: i64,
    #[arg(long, allow_negative_numbers = true)]
    base_end: i64,
    #[arg(long, allow_negative_numbers = true)]
    target_start: i64,
    #[arg(long, allow_negative_numbers = true)]
    target_end: i64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cases per suite.
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    /// Random directed graph, one event per edge.
    Random,
    /// Bipartite transactions with a labeled fraud burst.
    Fraud,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightArg {
    Int,
    Unit,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Random)]
    kind: GenKind,
    /// Random: vertex count. Fraud: user count.
    #[arg(long, default_value_t = 100)]
    vertices: usize,
    /// Random: edge count. Fraud: background transaction count.
    #[arg(long, default_value_t = 400)]
    edges: usize,
    /// Power-law exponent for endpoint popularity; uniform when absent
    /// (random kind only).
    #[arg(long)]
    power_law: Option<f64>,
    #[arg(long, value_enum, default_value_t = WeightArg::Int)]
    weights: WeightArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 20_000)]
    vertices: usize,
    #[arg(long, default_value_t = 100_000)]
    edges: usize,
    #[arg(long, default_value_t = 2.5)]
    exponent: f64,
    #[arg(long, default_value_t = 1000)]
    updates: usize,
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    #[arg(long, default_value_t = 5)]
    batches: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Invariant(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

/// Prints the summary, and writes the report to `path` or prints it to
/// standard output (the summary then goes to standard error).
fn emit<T: Serialize>(kind: &str, report: &T, path: Option<&Path>, summary: &str) -> Outcome {
    match path {
        Some(p) => {
            io::write_report(kind, report, p)?;
            println!("{summary}");
            println!("report written to {}", p.display());
        }
        None => {
            eprintln!("{summary}");
            print!("{}", report_json(kind, report));
        }
    }
    Ok(())
}

fn env_seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("SPADE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("SPADE_SEED must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(flag),
    }
}

fn load_engine(input: &Path, common: &Common) -> Result<Engine, Failure> {
    let stream = io::parse_stream(input)?;
    let mut engine = Engine::new(common.metric()?).with_priors(common.priors()?);
    for e in &stream.events {
        engine.stage_edge(&e.src, &e.dst, e.weight, e.timestamp)?;
    }
    engine.rebuild();
    engine.sequence().audit().map_err(Failure::Invariant)?;
    Ok(engine)
}

#[derive(Serialize)]
struct DetectReport {
    metric: String,
    vertices: usize,
    edges: usize,
    total_suspiciousness: f64,
    #[serde(flatten)]
    detection: CommunityReport,
    stats: ReorderStats,
}

fn detect(args: &DetectArgs) -> Outcome {
    let engine = load_engine(&args.input, &args.common)?;
    let det = engine.detect();
    let g = engine.graph();
    let report = DetectReport {
        metric: engine.model().name().to_string(),
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        total_suspiciousness: g.total_suspiciousness(),
        detection: CommunityReport::from_detection(&engine, &det),
        stats: det.stats,
    };
    let summary = format!(
        "{} vertices, {} edges: community of {} with density {:.6}",
        report.vertices,
        report.edges,
        report.detection.community.len(),
        report.detection.density
    );
    emit("detect", &report, args.common.report.as_deref(), &summary)
}

fn replay_cmd(args: &ReplayArgs) -> Outcome {
    let seed = env_seed(args.seed)?;
    let mut stream = io::parse_stream(&args.input)?;
    stream.monotone = !args.allow_unordered;
    let mode = match args.mode {
        ModeArg::Static => ReplayMode::Static(args.batch_size),
        ModeArg::Inc => ReplayMode::Inc,
        ModeArg::Batch => ReplayMode::Batch(args.batch_size),
        ModeArg::Group => ReplayMode::Group,
    };
    let config = io::RunConfig {
        metric: format!("{:?}", args.common.metric).to_lowercase(),
        fd_c: args.common.fd_c,
        init_fraction: args.init_fraction,
        mode: format!("{:?}", args.mode).to_lowercase(),
        batch_size: args.batch_size,
        flush: FlushPolicy {
            max_size: args.flush_max_size,
            max_age: args.flush_max_age,
        },
        seed,
        report: args.common.report.as_ref().map(|p| p.display().to_string()),
    };
    config.validate()?;
    let cfg = ReplayConfig {
        metric: config.metric()?,
        mode,
        init_fraction: config.init_fraction,
        flush: config.flush,
        clock: match args.clock {
            ClockArg::Measured => ClockMode::Measured,
            ClockArg::Logical => ClockMode::Logical,
        },
        priors: args.common.priors()?,
    };
    let report = replay(&stream, &cfg)?;
    let summary = format!(
        "{} over {} live events ({} initial): {} reorders, final community of {} with density {:.6}, latency {:.1}us over {} fraud events, prevention ratio {}",
        report.mode,
        report.live_events,
        report.initial_events,
        report.reorders.len(),
        report.final_detection.community.len(),
        report.final_detection.density,
        report.latency.total_us,
        report.latency.fraud_events,
        report
            .prevention_ratio
            .map_or("n/a".to_string(), |r| format!("{r:.4}")),
    );
    emit("replay", &report, args.common.report.as_deref(), &summary)
}

#[derive(Serialize)]
struct EnumerateReport {
    metric: String,
    k: usize,
    removal: Removal,
    communities: Vec<EnumeratedCommunity>,
}

#[derive(Serialize)]
struct EnumeratedCommunity {
    community: Vec<String>,
    density: f64,
}

fn enumerate_cmd(args: &EnumerateArgs) -> Outcome {
    if args.k == 0 {
        return Err(Failure::Input("k must be at least 1".into()));
    }
    let engine = load_engine(&args.input, &args.common)?;
    let removal = match args.removal {
        RemovalArg::Repeel => Removal::Repeel,
        RemovalArg::Incremental => Removal::Incremental,
    };
    let found = enumerate_dense(engine.graph(), args.k, removal)?;
    let g = engine.graph();
    let communities: Vec<EnumeratedCommunity> = found
        .iter()
        .map(|c| {
            let mut community: Vec<String> = c.vertices.iter().map(|&v| g.label(v).to_string()).collect();
            community.sort();
            EnumeratedCommunity {
                community,
                density: c.density,
            }
        })
        .collect();
    let mut summary = format!("{} communities", communities.len());
    for (i, c) in communities.iter().enumerate() {
        summary.push_str(&format!("\n  #{}: {} vertices, density {:.6}", i + 1, c.community.len(), c.density));
    }
    let report = EnumerateReport {
        metric: engine.model().name().to_string(),
        k: args.k,
        removal,
        communities,
    };
    emit("enumerate", &report, args.common.report.as_deref(), &summary)
}

#[derive(Serialize)]
struct WindowReport {
    metric: String,
    baseline: Window,
    target: Window,
    case: WindowCase,
    edges: usize,
    #[serde(flatten)]
    detection: CommunityReport,
    stats: ReorderStats,
}

fn window_cmd(args: &WindowArgs) -> Outcome {
    let stream = io::parse_stream(&args.input)?;
    let metric = args.common.metric()?;
    let index = WindowIndex::from_stream(&stream, metric, args.common.priors()?)?;
    let base = Window::new(args.base_start, args.base_end)?;
    let target = Window::new(args.target_start, args.target_end)?;
    let mut state = index.baseline(base);
    let (det, case) = index.detect_window(&mut state, target)?;
    state.sequence.audit().map_err(Failure::Invariant)?;
    let labels = |vs: &[spade_core::VertexId]| {
        let mut out: Vec<String> = vs.iter().map(|&v| state.graph.label(v).to_string()).collect();
        out.sort();
        out
    };
    let report = WindowReport {
        metric: metric.to_string(),
        baseline: base,
        target,
        case,
        edges: state.graph.edge_count(),
        detection: CommunityReport {
            community: labels(&det.community),
            density: det.density,
            prefix_index: det.prefix_index,
        },
        stats: det.stats,
    };
    let summary = format!(
        "window [{}, {}] via {:?}: community of {} with density {:.6}",
        target.start,
        target.end,
        case,
        report.detection.community.len(),
        report.detection.density
    );
    emit("window", &report, args.common.report.as_deref(), &summary)
}

fn verify_cmd(args: &VerifyArgs) -> Outcome {
    let seed = env_seed(args.seed)?;
    let report = verify_all(seed, args.cases);
    let mut summary = String::new();
    for s in &report.suites {
        let verdict = if s.ok() { "ok" } else { "FAILED" };
        summary.push_str(&format!("{:<28} {:>6}/{:<6} {verdict}\n", s.name, s.passed, s.cases));
        for f in &s.failures {
            summary.push_str(&format!("    {f}\n"));
        }
    }
    summary.push_str(if report.all_passed { "all suites passed" } else { "some suites failed" });
    emit("verify", &report, args.report.as_deref(), &summary)?;
    if report.all_passed {
        Ok(())
    } else {
        Err(Failure::Invariant("property suites failed".into()))
    }
}

fn gen_cmd(args: &GenArgs) -> Outcome {
    let seed = env_seed(args.seed)?;
    let stream = match args.kind {
        GenKind::Random => {
            let opts = GenOptions {
                weights: match args.weights {
                    WeightArg::Int => WeightLaw::default(),
                    WeightArg::Unit => WeightLaw::Unit,
                },
                degrees: match args.power_law {
                    Some(exponent) => DegreeLaw::PowerLaw { exponent },
                    None => DegreeLaw::Uniform,
                },
                max_vertex_weight: None,
            };
            let g = gen_with(args.vertices, args.edges, &opts, seed)?;
            let events = g
                .edges()
                .enumerate()
                .map(|(i, (s, d, c))| StreamEvent::new(g.label(s), g.label(d), c, i as i64 + 1))
                .collect();
            UpdateStream::new(events)
        }
        GenKind::Fraud => {
            let opts = SyntheticOptions {
                users: args.vertices,
                merchants: (args.vertices / 2).max(1),
                background_edges: args.edges,
                exponent: args.power_law.unwrap_or(2.5),
                max_weight: match args.weights {
                    WeightArg::Int => 10,
                    WeightArg::Unit => 1,
                },
                ..SyntheticOptions::default()
            };
            synthetic_stream(&opts, seed)?
        }
    };
    io::write_stream(&stream, &args.output)?;
    println!(
        "wrote {} events ({} fraud-labeled) to {}",
        stream.len(),
        stream.events.iter().filter(|e| e.fraud).count(),
        args.output.display()
    );
    Ok(())
}

fn bench_cmd(args: &BenchArgs) -> Outcome {
    let cfg = BenchConfig {
        vertices: args.vertices,
        edges: args.edges,
        exponent: args.exponent,
        updates: args.updates,
        batch_size: args.batch_size,
        batches: args.batches,
        static_runs: 5,
        seed: env_seed(args.seed)?,
    };
    let r = speedup_bench(&cfg)?;
    let summary = format!(
        "graph: {} vertices, {} edges\n\
         {:<22} {:>12} {:>12}\n\
         {:<22} {:>12.1} {:>12.1}\n\
         {:<22} {:>12.2} {:>12.2}\n\
         {:<22} {:>12.2} {:>12.2}\n\
         speedup (static / single-edge median): {:.0}x",
        r.vertices,
        r.edges,
        "update",
        "median us",
        "mean us",
        "static re-peel",
        r.static_peel.median_us,
        r.static_peel.mean_us,
        "single edge",
        r.single_edge.median_us,
        r.single_edge.mean_us,
        format!("batch({}) per edge", r.batch_size),
        r.batch_per_edge.median_us,
        r.batch_per_edge.mean_us,
        r.speedup_median,
    );
    emit("bench", &r, args.report.as_deref(), &summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Enumerate(a) => enumerate_cmd(a),
        Command::Window(a) => window_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Gen(a) => gen_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
