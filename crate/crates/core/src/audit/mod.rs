//! Offline amortized-cost auditor.
//!
//! [`audit_trace`] replays a trace twice. The first replay colors every node
//! (see [`color_nodes`]); the second tracks the potential Φ through every
//! operation and checks `a_i + ΔΦ_i ≤ â_i` against the per-operation budget
//! [`amortized_bound`], the rank bounds of every pairing inside
//! `extract_min`, the captured-node discipline, and the global conditions
//! `Φ_0 = 0`, `Φ_m ≥ 0`, `Σ a_i ≤ Σ â_i`.

mod potential;
mod rank;
mod report;
mod tracker;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

pub use potential::{
    color_nodes, heap_potential, lg, snapshot_invariants, snapshot_potential, Color, ColorMap, HeapAnnotation,
    NodeAnnotation, PotentialSnapshot,
};
pub use rank::{check_pairing_rank, PairingInputs, RankCheck};
pub use report::{write_csv, write_jsonl, AuditSummary};

use crate::heap::{Command, Forest, HeapId, NodeHandle, OpKind};
use crate::trace::{Operation, ReplayError, Replayer, Trace};
use tracker::PotentialTracker;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Allowed gap between the incremental Φ and a from-scratch evaluation.
pub const PHI_CROSS_CHECK_TOLERANCE: f64 = 1e-9;

/// Amortized budget `â` for an operation leaving its heap with `n` nodes.
pub fn amortized_bound(kind: OpKind, n: u64) -> f64 {
    let n = n as f64;
    match kind {
        OpKind::MakeHeap | OpKind::Insert => 21.0,
        OpKind::Meld => 0.0,
        OpKind::FindMin => 1.0,
        OpKind::DecreaseKey => 26.0 + 24.0 * n.max(1.0).log2(),
        OpKind::ExtractMin => 102.0 * (n + 1.0).log2() + 17.0,
        OpKind::Delete => 43.0 + 126.0 * (n + 2.0).log2(),
    }
}

/// Bound on the total rank gain of the pairings in one `extract_min`.
pub fn extract_rank_bound(n: u64, white_white_first: u64) -> f64 {
    54.0 * lg(n) - 36.0 * white_white_first as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    /// Absolute slack allowed on every inequality.
    pub tolerance: f64,
    /// Compare the incremental Φ with a from-scratch snapshot after every
    /// `k`-th operation (and after the last).
    pub cross_check_every: Option<usize>,
    /// Run the snapshot structural checks after every operation. Costs a
    /// full traversal per operation.
    pub check_invariants: bool,
    /// Keep every per-pairing rank check, not just the failing ones.
    pub record_pairings: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { tolerance: DEFAULT_TOLERANCE, cross_check_every: None, check_invariants: false, record_pairings: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpAudit {
    /// 1-based position in the trace.
    pub op_index: usize,
    pub kind: OpKind,
    /// Actual cost: pairings + 1.
    pub a: u64,
    /// Size of the operation's heap afterwards.
    pub n: u64,
    pub delta_phi: f64,
    pub bound: f64,
    pub slack: f64,
    #[serde(skip)]
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractAudit {
    pub op_index: usize,
    /// Children of the removed root.
    pub c: u64,
    /// First-pass pairings between two white nodes.
    pub w: u64,
    pub pairings: usize,
    pub rank_gain: f64,
    pub rank_bound: f64,
    pub ok: bool,
    /// Every rank check if requested, otherwise only the failing ones.
    pub checks: Vec<RankCheck>,
}

/// A `make_heap` followed by the first insert into that heap, charged as a
/// single one-node heap creation of cost 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MakeInsertAudit {
    pub make_index: usize,
    pub insert_index: usize,
    pub a: u64,
    pub delta_phi: f64,
    pub bound: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureViolation {
    pub op_index: usize,
    pub node: NodeHandle,
    pub black_parent: NodeHandle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiMismatch {
    pub op_index: usize,
    pub incremental: f64,
    pub scratch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantViolation {
    pub op_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AuditReport {
    pub tolerance: f64,
    pub ops: Vec<OpAudit>,
    pub extracts: Vec<ExtractAudit>,
    pub make_inserts: Vec<MakeInsertAudit>,
    pub capture_violations: Vec<CaptureViolation>,
    pub phi_mismatches: Vec<PhiMismatch>,
    pub invariant_violations: Vec<InvariantViolation>,
    /// Φ after each operation; `phi[0]` is Φ of the empty forest.
    pub phi: Vec<f64>,
    pub sum_a: u64,
    pub sum_bound: f64,
}

impl AuditReport {
    pub fn phi0(&self) -> f64 {
        self.phi[0]
    }

    pub fn phim(&self) -> f64 {
        *self.phi.last().expect("phi0 is always present")
    }

    pub fn ops_ok(&self) -> bool {
        self.ops.iter().all(|o| o.ok)
    }

    pub fn ranks_ok(&self) -> bool {
        self.extracts.iter().all(|e| e.ok)
    }

    /// `Φ_0 = 0`, `Φ_m ≥ 0` and `Σ a_i ≤ Σ â_i`.
    pub fn global_ok(&self) -> bool {
        self.phi0() == 0.0 && self.phim() >= -self.tolerance && self.sum_a as f64 <= self.sum_bound + self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.ops_ok()
            && self.ranks_ok()
            && self.global_ok()
            && self.make_inserts.iter().all(|m| m.ok)
            && self.capture_violations.is_empty()
            && self.phi_mismatches.is_empty()
            && self.invariant_violations.is_empty()
    }

    pub fn min_slack(&self) -> Option<f64> {
        self.ops.iter().map(|o| o.slack).min_by(f64::total_cmp)
    }

    pub fn summary(&self) -> AuditSummary {
        AuditSummary {
            phi0: self.phi0(),
            phim: self.phim(),
            sum_a: self.sum_a,
            sum_bound: self.sum_bound,
            verdict: if self.passed() { "pass" } else { "fail" },
        }
    }

    /// One line per failed check.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for o in self.ops.iter().filter(|o| !o.ok) {
            out.push(format!(
                "op {} {}: a = {}, delta_phi = {}, bound = {}, slack = {}",
                o.op_index, o.kind, o.a, o.delta_phi, o.bound, o.slack
            ));
        }
        for e in self.extracts.iter().filter(|e| !e.ok) {
            let bad = e.checks.iter().filter(|c| !c.ok).count();
            out.push(format!(
                "op {} extract_min: rank gain {} vs bound {} (w = {}), {bad} pairing checks failed",
                e.op_index, e.rank_gain, e.rank_bound, e.w
            ));
        }
        for m in self.make_inserts.iter().filter(|m| !m.ok) {
            out.push(format!(
                "ops {}+{} make_heap+insert: a = {}, delta_phi = {}, slack = {}",
                m.make_index, m.insert_index, m.a, m.delta_phi, m.slack
            ));
        }
        for c in &self.capture_violations {
            out.push(format!("op {}: {} paired while captured by black {}", c.op_index, c.node, c.black_parent));
        }
        for m in &self.phi_mismatches {
            out.push(format!("op {}: incremental phi {} vs scratch {}", m.op_index, m.incremental, m.scratch));
        }
        for v in &self.invariant_violations {
            out.push(format!("op {}: {}", v.op_index, v.message));
        }
        if self.phi0() != 0.0 {
            out.push(format!("phi0 = {}", self.phi0()));
        }
        if self.phim() < -self.tolerance {
            out.push(format!("phim = {} < 0", self.phim()));
        }
        if self.sum_a as f64 > self.sum_bound + self.tolerance {
            out.push(format!("sum a = {} exceeds sum bound = {}", self.sum_a, self.sum_bound));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("operation {op_index}: {error}")]
pub struct AuditError {
    pub op_index: usize,
    pub error: ReplayError,
}

pub fn audit_trace(trace: &Trace) -> Result<AuditReport, AuditError> {
    audit_trace_with(trace, &AuditOptions::default())
}

pub fn audit_trace_with(trace: &Trace, opts: &AuditOptions) -> Result<AuditReport, AuditError> {
    let colors = color_nodes(trace).map_err(|(op_index, error)| AuditError { op_index, error })?;
    let mut rp = Replayer::with_forest(Forest::new().without_event_log());
    let mut tr = PotentialTracker::new(opts.tolerance);
    let mut report = AuditReport { tolerance: opts.tolerance, phi: vec![tr.phi()], ..Default::default() };
    let mut sum_bound = 0.0f64;
    // Trace heaps created by make_heap and not yet touched since:
    // heap -> (make op index, its ΔΦ).
    let mut fresh: HashMap<HeapId, (usize, f64)> = HashMap::new();
    let tol = opts.tolerance;

    for (i, op) in trace.ops.iter().enumerate() {
        let op_index = i + 1;
        let fail = |error| AuditError { op_index, error };
        let cmd = rp.command(op).map_err(fail)?;
        let mut heaps = match cmd {
            Command::MakeHeap => vec![],
            Command::Meld { heap1, heap2 } => vec![heap1, heap2],
            Command::Insert { heap, .. }
            | Command::FindMin { heap }
            | Command::ExtractMin { heap }
            | Command::DecreaseKey { heap, .. }
            | Command::Delete { heap, .. } => vec![heap],
        };
        let exempt = match cmd {
            Command::DecreaseKey { node, .. } => Some(node),
            _ => None,
        };
        if let Operation::Insert { node_out, .. } = *op {
            tr.next_white = colors.is_white(node_out);
        }
        tr.begin_op(op.kind(), exempt);
        rp.step_observed(op, &mut tr).map_err(fail)?;
        if let Operation::MakeHeap { heap_out } | Operation::Meld { heap_out, .. } = *op {
            heaps.push(rp.heap(heap_out).expect("just bound"));
        }
        let delta_phi = tr.end_op(rp.forest(), &heaps);
        report.phi.push(tr.phi());

        let kind = op.kind();
        let cost = rp.forest().last_cost().expect("operation succeeded");
        let (a, n) = (cost.actual_cost, cost.heap_size_after);
        let bound = amortized_bound(kind, n);
        let slack = bound - (a as f64 + delta_phi);
        let ok = slack >= -tol && (kind != OpKind::FindMin || (delta_phi == 0.0 && a == 1));
        report.ops.push(OpAudit { op_index, kind, a, n, delta_phi, bound, slack, ok });
        report.sum_a += a;
        sum_bound += bound;

        if kind == OpKind::ExtractMin {
            let ex = std::mem::take(&mut tr.extract);
            let rank_gain = ex.gain.value();
            let rank_bound = extract_rank_bound(n, ex.white_white_first);
            let pairings = ex.checks.len();
            let all_ok = ex.checks.iter().all(|c| c.ok);
            let mut checks: Vec<RankCheck> =
                ex.checks.into_iter().filter(|c| opts.record_pairings || !c.ok).collect();
            for c in &mut checks {
                c.a = rp.trace_node(c.a);
                c.b = rp.trace_node(c.b);
                c.c = c.c.map(|p| rp.trace_node(p));
                c.winner = rp.trace_node(c.winner);
            }
            report.extracts.push(ExtractAudit {
                op_index,
                c: ex.children,
                w: ex.white_white_first,
                pairings,
                rank_gain,
                rank_bound,
                ok: all_ok && rank_gain <= rank_bound + tol,
                checks,
            });
        }

        for &(node, parent) in &tr.captured {
            report.capture_violations.push(CaptureViolation {
                op_index,
                node: rp.trace_node(node),
                black_parent: rp.trace_node(parent),
            });
        }

        match *op {
            Operation::MakeHeap { heap_out } => {
                fresh.insert(heap_out, (op_index, delta_phi));
            }
            Operation::Insert { heap, .. } => {
                if let Some((make_index, make_delta)) = fresh.remove(&heap) {
                    // One-node heap creation costs 1 as a single operation.
                    let delta_phi = make_delta + delta_phi;
                    let slack = 21.0 - (1.0 + delta_phi);
                    report.make_inserts.push(MakeInsertAudit {
                        make_index,
                        insert_index: op_index,
                        a: 1,
                        delta_phi,
                        bound: 21.0,
                        slack,
                        ok: slack >= -tol,
                    });
                }
            }
            Operation::Meld { heap1, heap2, .. } => {
                fresh.remove(&heap1);
                fresh.remove(&heap2);
            }
            Operation::FindMin { heap }
            | Operation::ExtractMin { heap }
            | Operation::DecreaseKey { heap, .. }
            | Operation::Delete { heap, .. } => {
                fresh.remove(&heap);
            }
        }

        let last = op_index == trace.ops.len();
        let cross = opts.cross_check_every.is_some_and(|k| op_index % k.max(1) == 0 || last);
        if cross || opts.check_invariants {
            let snap = snapshot_potential(rp.forest(), |p| tr.is_white(p));
            if cross && (snap.phi - tr.phi()).abs() > PHI_CROSS_CHECK_TOLERANCE {
                report.phi_mismatches.push(PhiMismatch { op_index, incremental: tr.phi(), scratch: snap.phi });
            }
            if cross {
                for a in &snap.nodes {
                    if a.s != tr.s(a.node) {
                        report.invariant_violations.push(InvariantViolation {
                            op_index,
                            message: format!("{}: tracked s = {}, recomputed s = {}", a.node, tr.s(a.node), a.s),
                        });
                    }
                }
            }
            if opts.check_invariants {
                let mut msgs = rp.forest().check_structure();
                msgs.extend(snapshot_invariants(rp.forest(), &snap));
                report
                    .invariant_violations
                    .extend(msgs.into_iter().map(|message| InvariantViolation { op_index, message }));
            }
        }
    }
    report.sum_bound = sum_bound;
    Ok(report)
}

#[cfg(test)]
mod tests;
