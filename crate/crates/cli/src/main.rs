//! `pheap`: generate, validate, replay, diff, audit and benchmark
//! pairing-heap operation traces.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 file error
//! (unreadable, unwritable, or not a well-formed trace).

mod bench;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use pheap::audit::{audit_trace_with, write_csv, write_jsonl, AuditOptions, DEFAULT_TOLERANCE};
use pheap::gen::{generate_random_trace, GeneratorConfig, KeyDistribution, OpMix};
use pheap::oracle::{diff_run, DiffReport};
use pheap::trace::{parse_trace, serialize_trace, trace_stats, validate_trace, Replayer, Trace};
use pheap::{Forest, OpKind, Pass};

#[derive(Parser)]
#[command(name = "pheap", version, about = "Pairing-heap trace toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random valid trace.
    Gen {
        #[arg(long, default_value_t = 1000)]
        ops: usize,
        /// Relative operation weights, e.g. "insert=8,extract_min=4,meld=1".
        #[arg(long, default_value_t = OpMix::default())]
        mix: OpMix,
        /// Target fraction of inserted nodes left in the forest at the end.
        #[arg(long, default_value_t = 0.3)]
        survivors: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// "perm" or "uniform:LO:HI".
        #[arg(long, default_value = "uniform:0:1000000")]
        keys: KeyDistribution,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that every operation in a trace is applicable.
    Validate { file: PathBuf },
    /// Replay a trace and summarize its costs.
    Run {
        file: PathBuf,
        /// Write one JSON line per operation with its pairings.
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Replay a trace against a brute-force priority queue.
    Diff { file: PathBuf },
    /// Check every amortized inequality of the potential analysis.
    Audit {
        file: PathBuf,
        /// JSON-lines report: one record per operation plus a summary.
        #[arg(long)]
        report: Option<PathBuf>,
        /// CSV report with one row per operation.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Compare the running potential with a full recomputation every K operations.
        #[arg(long, value_name = "K")]
        cross_check: Option<usize>,
    },
    /// Mean cost per operation kind, bucketed by heap size.
    Bench {
        /// Comma-separated trace lengths.
        #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = OpMix::default())]
        mix: OpMix,
        /// Number of seeds per size (seeds 0..K).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = 0.3)]
        survivors: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also audit every trace and report the mean slack.
        #[arg(long)]
        audit: bool,
    },
}

enum Failure {
    Check(String),
    Usage(String),
    File(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::File(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Usage(m) | Failure::File(m) => m,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn file_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::File(format!("{}: {e}", path.display()))
}

fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    parse_trace(&text).map_err(|e| file_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| file_err(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen { ops, mix, survivors, seed, keys, out } => {
            let cfg = GeneratorConfig { op_count: ops, mix, keys, survivor_fraction: survivors, seed };
            let trace = generate_random_trace(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            let text = serialize_trace(&trace);
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| file_err(&path, e)),
                None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::File(e.to_string())),
            }
        }
        Cmd::Validate { file } => validate(&file),
        Cmd::Run { file, events_out } => replay(&file, events_out.as_deref()),
        Cmd::Diff { file } => diff(&file),
        Cmd::Audit { file, report, csv, tolerance, cross_check } => {
            audit(&file, report.as_deref(), csv.as_deref(), tolerance, cross_check)
        }
        Cmd::Bench { sizes, mix, seeds, survivors, csv, audit } => {
            let cfg = bench::BenchConfig { sizes, mix, seeds, survivors, audit };
            let report = bench::run(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            print!("{}", report.render());
            if let Some(path) = csv {
                let w = create(&path)?;
                report.write_csv(w).map_err(|e| file_err(&path, e))?;
            }
            Ok(())
        }
    }
}

fn validate(file: &Path) -> Result<()> {
    let trace = read_trace(file)?;
    let stats = trace_stats(&trace);
    match validate_trace(&trace) {
        Ok(()) => {
            println!(
                "ok: {} operations, {} inserted, {} removed, survivor fraction {:.3}",
                trace.len(),
                stats.inserted,
                stats.removed,
                stats.survivor_fraction()
            );
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                println!("op {}: {}", v.op_index, v.error);
            }
            Err(Failure::Check(format!("{} invalid operations", violations.len())))
        }
    }
}

#[derive(Serialize)]
struct EventLine {
    pass: Pass,
    left: u64,
    right: u64,
    winner: u64,
    loser: u64,
}

#[derive(Serialize)]
struct OpLine {
    op_index: usize,
    kind: OpKind,
    actual_cost: u64,
    pairings: u64,
    heap_size_after: u64,
    events: Vec<EventLine>,
}

fn replay(file: &Path, events_out: Option<&Path>) -> Result<()> {
    let trace = read_trace(file)?;
    let mut events = events_out.map(create).transpose()?;
    let mut rp = Replayer::with_forest(Forest::new());
    let mut counts = [0u64; 7];
    let (mut cost, mut pairings) = (0u64, 0u64);
    for (i, op) in trace.ops.iter().enumerate() {
        rp.step(op).map_err(|e| Failure::Check(format!("op {}: {e}", i + 1)))?;
        let rec = rp.forest_mut().drain_events().pop().expect("one record per successful operation");
        counts[rec.kind as usize] += 1;
        cost += rec.cost.actual_cost;
        pairings += rec.cost.pairings;
        if let (Some(w), Some(path)) = (events.as_mut(), events_out) {
            let t = |p| rp.trace_node(p).0;
            let line = OpLine {
                op_index: i + 1,
                kind: rec.kind,
                actual_cost: rec.cost.actual_cost,
                pairings: rec.cost.pairings,
                heap_size_after: rec.cost.heap_size_after,
                events: rec
                    .events
                    .iter()
                    .map(|e| EventLine { pass: e.pass, left: t(e.left), right: t(e.right), winner: t(e.winner), loser: t(e.loser) })
                    .collect(),
            };
            serde_json::to_writer(&mut *w, &line).map_err(|e| file_err(path, e))?;
            w.write_all(b"\n").map_err(|e| file_err(path, e))?;
        }
    }
    if let (Some(mut w), Some(path)) = (events, events_out) {
        w.flush().map_err(|e| file_err(path, e))?;
    }
    let forest = rp.forest();
    println!("operations: {}", trace.len());
    for kind in OpKind::ALL {
        println!("  {:<13} {}", kind.as_str(), counts[kind as usize]);
    }
    println!("total actual cost: {cost}");
    println!("total pairings: {pairings}");
    println!("live heaps: {}, live nodes: {}", forest.live_heaps().count(), forest.live_nodes().count());
    Ok(())
}

fn diff(file: &Path) -> Result<()> {
    let trace = read_trace(file)?;
    match diff_run(&trace) {
        DiffReport::Equivalent => {
            println!("equivalent: {} operations", trace.len());
            Ok(())
        }
        DiffReport::Divergence { op_index, kind, core, oracle } => {
            println!("divergence at op {op_index} ({kind})");
            println!("  pairing heap: {core:?}");
            println!("  oracle:       {oracle:?}");
            Err(Failure::Check(format!("divergence at op {op_index}")))
        }
    }
}

fn audit(file: &Path, report: Option<&Path>, csv: Option<&Path>, tolerance: f64, cross_check: Option<usize>) -> Result<()> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Failure::Usage(format!("tolerance must be a nonnegative number, got {tolerance}")));
    }
    let trace = read_trace(file)?;
    let opts = AuditOptions { tolerance, cross_check_every: cross_check, ..Default::default() };
    let r = audit_trace_with(&trace, &opts).map_err(|e| Failure::Check(e.to_string()))?;
    if let Some(path) = report {
        write_jsonl(&r, create(path)?).map_err(|e| file_err(path, e))?;
    }
    if let Some(path) = csv {
        write_csv(&r, create(path)?).map_err(|e| file_err(path, e))?;
    }
    let pairings: usize = r.extracts.iter().map(|e| e.pairings).sum();
    println!("operations: {}", r.ops.len());
    println!("min slack: {}", r.min_slack().map_or("-".to_string(), |s| format!("{s:.6}")));
    println!("extract_min rank checks: {} operations, {pairings} pairings", r.extracts.len());
    let s = r.summary();
    println!("phi0 = {}, phim = {:.6}, sum a = {}, sum bound = {:.6}", s.phi0, s.phim, s.sum_a, s.sum_bound);
    let failures = r.failures();
    for f in failures.iter().take(20) {
        println!("FAIL {f}");
    }
    if failures.len() > 20 {
        println!("... {} more", failures.len() - 20);
    }
    println!("verdict: {}", s.verdict);
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} failed checks", failures.len())))
    }
}
