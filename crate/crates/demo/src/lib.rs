//! Browser demo: three entry points, each taking plain strings/numbers and
//! returning a JSON document for the page to draw.
//!
//! * [`extract_min_steps`] — one `extract_min` on a root with a given child
//!   list, with the sibling list after every pairing.
//! * [`audit_series`] — generate a random trace, audit it, and return Φ and
//!   the slack of every operation.
//! * [`potential_breakdown`] — the potential of every node of a heap built
//!   from a key list, given how many of its minima are extracted later.
//!
//! Errors come back as `{"error": "..."}`.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use pheap::audit::{audit_trace_with, color_nodes, snapshot_potential, AuditOptions, NodeAnnotation};
use pheap::gen::{generate_random_trace, GeneratorConfig, KeyDistribution, OpMix};
use pheap::trace::{Operation, Replayer, Trace};
use pheap::{Forest, ForestObserver, HeapId, Key, NodeHandle, PairingEvent, TreeShape};

fn parse_keys(text: &str) -> Result<Vec<Key>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: f64 = t.parse().map_err(|_| format!("not a number: {t:?}"))?;
            Key::new(v).map_err(|e| e.to_string())
        })
        .collect()
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

// ---- extract_min steps ----------------------------------------------------

#[derive(Debug, Serialize)]
pub struct Step {
    pub pass: &'static str,
    pub left: f64,
    pub right: f64,
    pub winner: f64,
    /// The parentless sibling list after this pairing, left to right.
    pub trees: Vec<TreeShape>,
}

#[derive(Debug, Serialize)]
pub struct ExtractSteps {
    pub before: TreeShape,
    pub min: f64,
    pub steps: Vec<Step>,
    pub after: Option<TreeShape>,
    pub pairings: u64,
    pub actual_cost: u64,
}

/// Records the sibling list after each pairing.
#[derive(Default)]
struct StepRecorder {
    head: Option<NodeHandle>,
    steps: Vec<Step>,
}

impl ForestObserver for StepRecorder {
    fn root_removed(&mut self, _forest: &Forest, _node: NodeHandle, first_child: Option<NodeHandle>) {
        self.head = first_child;
    }

    fn after_pairing(&mut self, forest: &Forest, ev: &PairingEvent) {
        if self.head == Some(ev.left) {
            self.head = Some(ev.winner);
        }
        let mut trees = Vec::new();
        let mut cur = self.head;
        while let Some(x) = cur {
            trees.push(forest.shape_of(x));
            cur = forest.node(x).and_then(|v| v.right_sibling);
        }
        let key = |p: NodeHandle| forest.key(p).map_or(f64::NAN, Key::value);
        self.steps.push(Step {
            pass: ev.pass.as_str(),
            left: key(ev.left),
            right: key(ev.right),
            winner: key(ev.winner),
            trees,
        });
    }
}

/// `root` followed by the root's children left to right, e.g.
/// `"1 4 3 7 2 5 9 8 6"`. Children must not be smaller than the root.
pub fn extract_min_steps_impl(keys: &str) -> Result<ExtractSteps, String> {
    let keys = parse_keys(keys)?;
    let (&root, children) = keys.split_first().ok_or("enter the root key followed by its children")?;
    if let Some(bad) = children.iter().find(|k| **k < root) {
        return Err(format!("child {bad} is smaller than the root {root}"));
    }
    let mut forest = Forest::new();
    let h = forest.make_heap();
    forest.insert(h, root).map_err(|e| e.to_string())?;
    // Each insert under the root becomes its new leftmost child.
    for &k in children.iter().rev() {
        forest.insert(h, k).map_err(|e| e.to_string())?;
    }
    let before = forest.shape(h).expect("nonempty");
    forest.drain_events();
    let mut rec = StepRecorder::default();
    let outcome = forest.apply(pheap::Command::ExtractMin { heap: h }, &mut rec).map_err(|e| e.to_string())?;
    let min = match outcome {
        pheap::Outcome::Min(_, k) => k.value(),
        _ => unreachable!(),
    };
    let cost = forest.last_cost().expect("operation succeeded");
    Ok(ExtractSteps {
        before,
        min,
        steps: rec.steps,
        after: forest.shape(h),
        pairings: cost.pairings,
        actual_cost: cost.actual_cost,
    })
}

#[wasm_bindgen]
pub fn extract_min_steps(keys: &str) -> String {
    to_json(extract_min_steps_impl(keys))
}

// ---- audit series ---------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct AuditSeries {
    pub kinds: Vec<&'static str>,
    pub phi: Vec<f64>,
    pub slack: Vec<f64>,
    pub cost: Vec<u64>,
    pub min_slack: f64,
    pub sum_a: u64,
    pub sum_bound: f64,
    pub verdict: &'static str,
    pub failures: Vec<String>,
}

pub const MAX_DEMO_OPS: usize = 20_000;

pub fn audit_series_impl(ops: usize, seed: u64, survivors: f64, mix: &str) -> Result<AuditSeries, String> {
    if ops > MAX_DEMO_OPS {
        return Err(format!("at most {MAX_DEMO_OPS} operations in the browser"));
    }
    let mix: OpMix = if mix.trim().is_empty() { OpMix::default() } else { mix.parse().map_err(|e| format!("{e}"))? };
    let cfg = GeneratorConfig {
        op_count: ops,
        mix,
        keys: KeyDistribution::Uniform { lo: 0.0, hi: 1000.0 },
        survivor_fraction: survivors,
        seed,
    };
    let trace = generate_random_trace(&cfg).map_err(|e| e.to_string())?;
    let r = audit_trace_with(&trace, &AuditOptions::default()).map_err(|e| e.to_string())?;
    let s = r.summary();
    Ok(AuditSeries {
        kinds: r.ops.iter().map(|o| o.kind.as_str()).collect(),
        phi: r.phi.clone(),
        slack: r.ops.iter().map(|o| o.slack).collect(),
        cost: r.ops.iter().map(|o| o.a).collect(),
        min_slack: r.min_slack().unwrap_or(0.0),
        sum_a: s.sum_a,
        sum_bound: s.sum_bound,
        verdict: s.verdict,
        failures: r.failures().into_iter().take(10).collect(),
    })
}

#[wasm_bindgen]
pub fn audit_series(ops: usize, seed: u32, survivors: f64, mix: &str) -> String {
    to_json(audit_series_impl(ops, u64::from(seed), survivors, mix))
}

// ---- potential breakdown --------------------------------------------------

#[derive(Debug, Serialize)]
pub struct NodeRow {
    pub key: f64,
    #[serde(flatten)]
    pub annotation: NodeAnnotation,
}

#[derive(Debug, Serialize)]
pub struct Breakdown {
    pub tree: TreeShape,
    pub nodes: Vec<NodeRow>,
    pub heap_potential: f64,
    pub phi: f64,
}

/// Inserts `keys` into one heap, colors the `extracted` smallest white (they
/// are extracted afterwards, the rest survive), and returns the potential
/// of the heap right after the inserts.
pub fn potential_breakdown_impl(keys: &str, extracted: usize) -> Result<Breakdown, String> {
    let keys = parse_keys(keys)?;
    if keys.is_empty() {
        return Err("enter at least one key".into());
    }
    if extracted > keys.len() {
        return Err(format!("cannot extract {extracted} of {} nodes", keys.len()));
    }
    let h = HeapId(1);
    let mut ops = vec![Operation::MakeHeap { heap_out: h }];
    ops.extend(keys.iter().enumerate().map(|(i, &key)| Operation::Insert { heap: h, key, node_out: NodeHandle(i as u64 + 1) }));
    let inserts = ops.len();
    ops.extend(std::iter::repeat_n(Operation::ExtractMin { heap: h }, extracted));
    let trace = Trace::new(ops);
    let colors = color_nodes(&trace).map_err(|(i, e)| format!("op {i}: {e}"))?;

    let mut rp = Replayer::new();
    for op in &trace.ops[..inserts] {
        rp.step(op).map_err(|e| e.to_string())?;
    }
    let forest = rp.forest();
    let snap = snapshot_potential(forest, |p| colors.is_white(rp.trace_node(p)));
    let nodes = snap
        .nodes
        .iter()
        .map(|a| NodeRow { key: forest.key(a.node).map_or(f64::NAN, Key::value), annotation: *a })
        .collect();
    Ok(Breakdown {
        tree: forest.shape(rp.heap(h).expect("live")).expect("nonempty"),
        nodes,
        heap_potential: snap.heaps[0].potential,
        phi: snap.phi,
    })
}

#[wasm_bindgen]
pub fn potential_breakdown(keys: &str, extracted: usize) -> String {
    to_json(potential_breakdown_impl(keys, extracted))
}
