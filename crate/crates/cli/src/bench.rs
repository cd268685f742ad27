//! Workload benchmark: actual cost per operation kind, bucketed by the size
//! of the heap the operation leaves behind.
//!
//! Pairings are the primary metric; wall time is reported on stdout only so
//! that the CSV is byte-identical across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use pheap::audit::{audit_trace_with, AuditOptions};
use pheap::gen::{generate_random_trace, GenError, GeneratorConfig, KeyDistribution, OpMix};
use pheap::trace::Replayer;
use pheap::{Forest, OpKind};

pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub mix: OpMix,
    pub seeds: u64,
    pub survivors: f64,
    pub audit: bool,
}

/// Lower end of the power-of-two bucket holding `n` (0 for empty heaps).
fn bucket(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        1 << n.ilog2()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    count: u64,
    cost: u64,
    pairings: u64,
    slack: f64,
}

type Key = (usize, u64, OpKind);

struct CellResult {
    size: usize,
    cells: BTreeMap<Key, Cell>,
    wall: Duration,
}

fn run_cell(cfg: &BenchConfig, size: usize, seed: u64) -> Result<CellResult, GenError> {
    let gen = GeneratorConfig {
        op_count: size,
        mix: cfg.mix,
        keys: KeyDistribution::Uniform { lo: 0.0, hi: 1e6 },
        survivor_fraction: cfg.survivors,
        seed,
    };
    let trace = generate_random_trace(&gen)?;
    let mut cells: BTreeMap<Key, Cell> = BTreeMap::new();

    let start = Instant::now();
    let mut rp = Replayer::with_forest(Forest::new().without_event_log());
    let mut records = Vec::with_capacity(trace.len());
    for op in &trace.ops {
        rp.step(op).expect("generated traces are valid");
        records.push((op.kind(), rp.forest().last_cost().expect("operation succeeded")));
    }
    let wall = start.elapsed();

    for (kind, c) in &records {
        let cell = cells.entry((size, bucket(c.heap_size_after), *kind)).or_default();
        cell.count += 1;
        cell.cost += c.actual_cost;
        cell.pairings += c.pairings;
    }
    if cfg.audit {
        let report = audit_trace_with(&trace, &AuditOptions::default()).expect("generated traces are valid");
        for o in &report.ops {
            cells.get_mut(&(size, bucket(o.n), o.kind)).expect("same replay").slack += o.slack;
        }
    }
    Ok(CellResult { size, cells, wall })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub ops: usize,
    pub bucket: u64,
    pub kind: OpKind,
    pub count: u64,
    pub total_cost: u64,
    pub mean_cost: f64,
    pub pairings: u64,
    pub mean_slack: Option<f64>,
}

pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub wall: BTreeMap<usize, Duration>,
    pub seeds: u64,
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport, GenError> {
    let jobs: Vec<(usize, u64)> = cfg.sizes.iter().flat_map(|&s| (0..cfg.seeds).map(move |seed| (s, seed))).collect();
    let results: Vec<CellResult> =
        jobs.par_iter().map(|&(size, seed)| run_cell(cfg, size, seed)).collect::<Result<_, _>>()?;

    // `results` is in job order, so the merge is deterministic.
    let mut merged: BTreeMap<Key, Cell> = BTreeMap::new();
    let mut wall: BTreeMap<usize, Duration> = BTreeMap::new();
    for r in results {
        *wall.entry(r.size).or_default() += r.wall;
        for (k, c) in r.cells {
            let m = merged.entry(k).or_default();
            m.count += c.count;
            m.cost += c.cost;
            m.pairings += c.pairings;
            m.slack += c.slack;
        }
    }
    let rows = merged
        .into_iter()
        .map(|((ops, bucket, kind), c)| BenchRow {
            ops,
            bucket,
            kind,
            count: c.count,
            total_cost: c.cost,
            mean_cost: c.cost as f64 / c.count as f64,
            pairings: c.pairings,
            mean_slack: cfg.audit.then(|| c.slack / c.count as f64),
        })
        .collect();
    Ok(BenchReport { rows, wall, seeds: cfg.seeds })
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (&ops, wall) in &self.wall {
            let _ = writeln!(s, "trace length {ops} x {} seeds, replay wall time {:.3?}", self.seeds, wall);
            let _ = writeln!(
                s,
                "  {:>8} {:<13} {:>9} {:>11} {:>10} {:>11}",
                "bucket", "kind", "count", "mean cost", "pairings", "mean slack"
            );
            for r in self.rows.iter().filter(|r| r.ops == ops) {
                let slack = r.mean_slack.map_or("-".to_string(), |v| format!("{v:.3}"));
                let _ = writeln!(
                    s,
                    "  {:>8} {:<13} {:>9} {:>11.4} {:>10} {:>11}",
                    r.bucket,
                    r.kind.as_str(),
                    r.count,
                    r.mean_cost,
                    r.pairings,
                    slack
                );
            }
        }
        s
    }

    pub fn write_csv(&self, out: impl Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets_are_powers_of_two() {
        assert_eq!([0, 1, 2, 3, 4, 7, 8, 1000].map(bucket), [0, 1, 2, 2, 4, 4, 8, 512]);
    }

    #[test]
    fn totals_match_replay() {
        let cfg = BenchConfig { sizes: vec![500], mix: OpMix::default(), seeds: 2, survivors: 0.3, audit: true };
        let report = run(&cfg).unwrap();
        let count: u64 = report.rows.iter().map(|r| r.count).sum();
        assert_eq!(count, 1000);
        assert!(report.rows.iter().all(|r| r.total_cost == r.count + r.pairings));
        assert!(report.rows.iter().all(|r| r.mean_slack.unwrap() >= -1e-6));
    }
}
