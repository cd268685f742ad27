//! Acceptance run: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Tolerances are fixed: 1e-6 absolute on every amortized inequality and
//! 1e-9 absolute between incremental and from-scratch Φ.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pheap::audit::{audit_trace_with, AuditOptions, AuditReport, DEFAULT_TOLERANCE};
use pheap::gen::{generate_random_trace, insert_then_drain, GeneratorConfig, KeyDistribution, OpMix};
use pheap::oracle::{diff_run, DiffReport};
use pheap::trace::Trace;
use pheap::{Forest, Key, OpKind, Pass};

const TOL: f64 = DEFAULT_TOLERANCE;
const SURVIVOR_FRACTIONS: [f64; 3] = [0.0, 0.3, 0.7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `"; first: ..."` for a nonempty failure list, empty otherwise.
fn first<T: std::fmt::Debug>(failures: &[T]) -> String {
    failures.first().map_or(String::new(), |f| format!("; first: {f:?}"))
}

/// Mixes cycled through the randomized corpus.
fn mixes() -> Vec<OpMix> {
    vec![
        OpMix::default(),
        "make_heap=1,insert=6,meld=2,find_min=1,extract_min=2,decrease_key=8,delete=3".parse().unwrap(),
        "make_heap=0.2,insert=10,meld=0.5,find_min=0.5,extract_min=6,decrease_key=1,delete=0.5".parse().unwrap(),
    ]
}

fn corpus_config(seed: u64, fraction: f64, op_count: usize) -> GeneratorConfig {
    let mixes = mixes();
    let keys = if seed.is_multiple_of(2) {
        KeyDistribution::Permutation
    } else {
        // Narrow range: plenty of equal keys.
        KeyDistribution::Uniform { lo: 0.0, hi: 1000.0 }
    };
    GeneratorConfig { op_count, mix: mixes[seed as usize % mixes.len()], keys, survivor_fraction: fraction, seed }
}

/// 100 seeds × each survivor fraction, 10⁴ operations per trace.
fn corpus() -> impl Iterator<Item = (u64, f64, Trace)> {
    (0..100u64).flat_map(|seed| {
        SURVIVOR_FRACTIONS.into_iter().map(move |f| {
            let t = generate_random_trace(&corpus_config(seed, f, 10_000)).expect("generator config is valid");
            (seed, f, t)
        })
    })
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let mut forest = Forest::new();
    let h = forest.make_heap();
    for k in [1.0, 6.0, 8.0, 9.0, 5.0, 2.0, 7.0, 3.0, 4.0] {
        forest.insert(h, Key::new(k).unwrap()).unwrap();
    }
    let before = forest.shape(h).unwrap().render();
    forest.drain_events();
    let (_, min) = forest.extract_min(h).unwrap();
    let after = forest.shape(h).map(|s| s.render()).unwrap_or_default();
    let rec = forest.drain_events().pop().unwrap();
    let elapsed = start.elapsed();
    let first = rec.events.iter().filter(|e| e.pass == Pass::First).count();
    let pass = before == "1(4 3 7 2 5 9 8 6)"
        && min.value() == 1.0
        && after == "2(3(4) 5(6(8) 9) 7)"
        && rec.events.len() == 7
        && first == 4
        && rec.cost.actual_cost == 8
        && elapsed < Duration::from_secs(1);
    check(
        pass,
        format!(
            "before {before}, min {min}, after {after}, {} pairings, cost {}, {:.1?}",
            rec.events.len(),
            rec.cost.actual_cost,
            elapsed
        ),
    )
}

fn differential() -> Outcome {
    let mut traces = 0;
    let mut bad = Vec::new();
    for (seed, f, t) in corpus() {
        traces += 1;
        if let DiffReport::Divergence { op_index, kind, .. } = diff_run(&t) {
            bad.push(format!("seed {seed} f {f}: op {op_index} ({kind})"));
        }
    }
    check(bad.is_empty(), format!("{traces} traces, {} divergent{}", bad.len(), first(&bad)))
}

struct CorpusAudit {
    traces: usize,
    ops: usize,
    op_violations: Vec<String>,
    find_min_violations: usize,
    extracts: usize,
    pairings: usize,
    pairing_violations: usize,
    extract_violations: Vec<String>,
    global_violations: Vec<String>,
    min_slack: f64,
    min_rank_margin: f64,
}

fn audit_corpus() -> CorpusAudit {
    let mut c = CorpusAudit {
        traces: 0,
        ops: 0,
        op_violations: vec![],
        find_min_violations: 0,
        extracts: 0,
        pairings: 0,
        pairing_violations: 0,
        extract_violations: vec![],
        global_violations: vec![],
        min_slack: f64::INFINITY,
        min_rank_margin: f64::INFINITY,
    };
    // Cross-check the incremental potential against a full recomputation
    // every 500 operations.
    let opts = AuditOptions { cross_check_every: Some(500), ..Default::default() };
    for (seed, f, t) in corpus() {
        let r: AuditReport = audit_trace_with(&t, &opts).expect("generated traces are valid");
        c.traces += 1;
        c.ops += r.ops.len();
        for o in &r.ops {
            c.min_slack = c.min_slack.min(o.slack);
            if o.slack < -TOL {
                c.op_violations.push(format!("seed {seed} f {f} op {} {} slack {}", o.op_index, o.kind, o.slack));
            }
            if o.kind == OpKind::FindMin && !(o.delta_phi == 0.0 && o.a == 1) {
                c.find_min_violations += 1;
            }
        }
        for e in &r.extracts {
            c.extracts += 1;
            c.pairings += e.pairings;
            c.pairing_violations += e.checks.iter().filter(|x| !x.ok).count();
            c.min_rank_margin = c.min_rank_margin.min(e.rank_bound - e.rank_gain);
            if e.rank_gain > e.rank_bound + TOL {
                c.extract_violations.push(format!(
                    "seed {seed} f {f} op {}: gain {:.3} > bound {:.3}",
                    e.op_index, e.rank_gain, e.rank_bound
                ));
            }
        }
        if !r.global_ok() || !r.phi_mismatches.is_empty() || !r.invariant_violations.is_empty() {
            c.global_violations.push(format!(
                "seed {seed} f {f}: phi0 {} phim {} sum_a {} sum_bound {} mismatches {}",
                r.phi0(),
                r.phim(),
                r.sum_a,
                r.sum_bound,
                r.phi_mismatches.len() + r.invariant_violations.len()
            ));
        }
    }
    c
}

fn structural() -> Outcome {
    let opts = AuditOptions { cross_check_every: Some(1), check_invariants: true, ..Default::default() };
    let mut ops = 0;
    let mut bad = Vec::new();
    for seed in 0..20u64 {
        let f = SURVIVOR_FRACTIONS[seed as usize % 3];
        let t = generate_random_trace(&corpus_config(seed, f, 1000)).unwrap();
        let r = audit_trace_with(&t, &opts).unwrap();
        ops += r.ops.len();
        for v in &r.invariant_violations {
            bad.push(format!("seed {seed} op {}: {}", v.op_index, v.message));
        }
        for v in &r.phi_mismatches {
            bad.push(format!("seed {seed} op {}: phi {} vs {}", v.op_index, v.incremental, v.scratch));
        }
        for v in &r.capture_violations {
            bad.push(format!("seed {seed} op {}: captured {} paired", v.op_index, v.node));
        }
    }
    check(bad.is_empty(), format!("20 traces, {ops} ops, {} violations{}", bad.len(), first(&bad)))
}

fn insert_budget() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for exp in [10u32, 14, 18] {
        let n = 1usize << exp;
        let t = insert_then_drain(n, u64::from(exp));
        let opts = AuditOptions { cross_check_every: Some(n / 4), ..Default::default() };
        let r = audit_trace_with(&t, &opts).unwrap();
        let insert_cost: u64 = r.ops.iter().filter(|o| o.kind == OpKind::Insert).map(|o| o.a).sum();
        let budget = 21 * n as u64 + 21;
        let min_slack = r.min_slack().unwrap_or(0.0);
        let ok = insert_cost <= budget && r.ops.iter().all(|o| o.slack >= -TOL) && r.passed();
        pass &= ok;
        parts.push(format!("n=2^{exp}: inserts {insert_cost} <= {budget}, min slack {min_slack:.3}, audit {}", r.summary().verdict));
    }
    check(pass, parts.join("; "))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {id} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "worked extract_min example", worked_example());
    report(2, "differential vs brute-force oracle", differential());

    let c = audit_corpus();
    report(
        3,
        "per-operation amortized bounds",
        check(
            c.op_violations.is_empty() && c.find_min_violations == 0,
            format!(
                "{} traces, {} ops, {} violations, {} find_min violations, min slack {:.4}{}",
                c.traces,
                c.ops,
                c.op_violations.len(),
                c.find_min_violations,
                c.min_slack,
                first(&c.op_violations)
            ),
        ),
    );
    report(
        4,
        "rank checks per pairing and per extract_min",
        check(
            c.pairing_violations == 0 && c.extract_violations.is_empty(),
            format!(
                "{} extracts, {} pairings, {} pairing violations, {} extract violations, min margin {:.4}{}",
                c.extracts,
                c.pairings,
                c.pairing_violations,
                c.extract_violations.len(),
                c.min_rank_margin,
                first(&c.extract_violations)
            ),
        ),
    );
    report(
        5,
        "global amortized inequality",
        check(
            c.global_violations.is_empty(),
            format!("{} traces, {} violations{}", c.traces, c.global_violations.len(), first(&c.global_violations)),
        ),
    );
    report(6, "structural invariants after every operation", structural());
    report(7, "insert budget on insert-then-drain", insert_budget());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
