//! Incremental maintenance of Φ while a trace replays.
//!
//! The tracker keeps `s(x)` and the general-tree parent of every node and
//! updates them from the forest's structural callbacks. Each callback marks
//! the few nodes whose potential may have changed; at the end of the
//! operation only those are re-evaluated. Φ and each operation's ΔΦ are
//! accumulated with compensated summation so that the running total matches
//! a from-scratch evaluation to within a few ulps.

use std::collections::HashMap;

use super::potential::{annotate, CompensatedSum, LogFactorials, NodeInputs};
use super::rank::{check_pairing_rank, PairingInputs, RankCheck};
use crate::heap::{Cut, Forest, ForestObserver, HeapId, NodeHandle, OpKind, PairingEvent, Pass};

fn idx(p: NodeHandle) -> usize {
    (p.0 - 1) as usize
}

/// What one `extract_min` looked like to the rank checks.
#[derive(Debug, Default)]
pub(crate) struct ExtractTrace {
    pub children: u64,
    pub white_white_first: u64,
    pub gain: CompensatedSum,
    pub checks: Vec<RankCheck>,
}

#[derive(Debug, Default)]
pub(crate) struct PotentialTracker {
    white: Vec<bool>,
    s: Vec<u64>,
    parent: Vec<Option<NodeHandle>>,
    pot: Vec<f64>,
    dirty_flag: Vec<bool>,
    dirty: Vec<NodeHandle>,
    heap_pot: HashMap<HeapId, f64>,
    logf: LogFactorials,
    phi: CompensatedSum,
    tolerance: f64,

    // Per-operation state.
    pub next_white: bool,
    kind: Option<OpKind>,
    exempt: Option<NodeHandle>,
    start_parent: HashMap<NodeHandle, Option<NodeHandle>>,
    pending: Option<PairingInputs>,
    pub extract: ExtractTrace,
    /// `(node, black parent)` for pairings that involved a captured node.
    pub captured: Vec<(NodeHandle, NodeHandle)>,
}

impl PotentialTracker {
    pub fn new(tolerance: f64) -> Self {
        PotentialTracker { tolerance, ..Self::default() }
    }

    pub fn phi(&self) -> f64 {
        self.phi.value()
    }

    pub fn is_white(&self, p: NodeHandle) -> bool {
        self.white[idx(p)]
    }

    pub fn s(&self, p: NodeHandle) -> u64 {
        self.s[idx(p)]
    }

    /// Starts an operation. `exempt` is the `decrease_key` target, which
    /// may legitimately be captured when the operation begins.
    pub fn begin_op(&mut self, kind: OpKind, exempt: Option<NodeHandle>) {
        self.kind = Some(kind);
        self.exempt = exempt;
        self.start_parent.clear();
        self.extract = ExtractTrace::default();
        self.captured.clear();
    }

    /// Re-evaluates every node and heap the operation touched and returns ΔΦ.
    pub fn end_op(&mut self, forest: &Forest, heaps: &[HeapId]) -> f64 {
        let mut delta = CompensatedSum::default();
        let dirty = std::mem::take(&mut self.dirty);
        for &x in &dirty {
            self.dirty_flag[idx(x)] = false;
            let new = if forest.is_live_node(x) { self.node_potential(forest, x) } else { 0.0 };
            let old = std::mem::replace(&mut self.pot[idx(x)], new);
            if new != old {
                delta.add(new);
                delta.add(-old);
                self.phi.add(new);
                self.phi.add(-old);
            }
        }
        self.dirty = dirty;
        self.dirty.clear();
        for &h in heaps {
            let new = if forest.is_live_heap(h) {
                let whites = forest.root_of(h).map_or(0, |r| self.s(r));
                Some(self.logf.heap_potential(whites))
            } else {
                None
            };
            let old = match new {
                Some(v) => self.heap_pot.insert(h, v),
                None => self.heap_pot.remove(&h),
            };
            let (new, old) = (new.unwrap_or(0.0), old.unwrap_or(0.0));
            if new != old {
                delta.add(new);
                delta.add(-old);
                self.phi.add(new);
                self.phi.add(-old);
            }
        }
        self.kind = None;
        self.exempt = None;
        delta.value()
    }

    fn mark(&mut self, p: Option<NodeHandle>) {
        if let Some(p) = p {
            if !self.dirty_flag[idx(p)] {
                self.dirty_flag[idx(p)] = true;
                self.dirty.push(p);
            }
        }
    }

    fn s_of(&self, p: Option<NodeHandle>) -> u64 {
        p.map_or(0, |p| self.s[idx(p)])
    }

    fn set_parent(&mut self, x: NodeHandle, p: Option<NodeHandle>) {
        let old = self.parent[idx(x)];
        self.start_parent.entry(x).or_insert(old);
        self.parent[idx(x)] = p;
    }

    fn parent_at_start(&self, x: NodeHandle) -> Option<NodeHandle> {
        if self.exempt == Some(x) {
            return self.parent[idx(x)];
        }
        self.start_parent.get(&x).copied().unwrap_or(self.parent[idx(x)])
    }

    fn node_potential(&self, forest: &Forest, x: NodeHandle) -> f64 {
        let v = forest.node(x).expect("live node");
        let left = v
            .parent_or_left_neighbor
            .filter(|p| forest.node(*p).expect("live").leftmost_child != Some(x));
        annotate(
            x,
            HeapId(0),
            NodeInputs {
                white: self.is_white(x),
                s: self.s(x),
                s_child: self.s_of(v.leftmost_child),
                s_sibling: self.s_of(v.right_sibling),
                parent_white: self.parent[idx(x)].map(|p| self.is_white(p)),
                left_white: left.map(|p| self.is_white(p)),
                right_white: v.right_sibling.map(|p| self.is_white(p)),
            },
        )
        .potential
    }
}

impl ForestObserver for PotentialTracker {
    fn node_created(&mut self, _forest: &Forest, node: NodeHandle) {
        let i = idx(node);
        if self.white.len() <= i {
            let n = i + 1;
            self.white.resize(n, false);
            self.s.resize(n, 0);
            self.parent.resize(n, None);
            self.pot.resize(n, 0.0);
            self.dirty_flag.resize(n, false);
        }
        self.white[i] = self.next_white;
        self.s[i] = u64::from(self.next_white);
        self.mark(Some(node));
    }

    fn before_pairing(&mut self, forest: &Forest, left: NodeHandle, right: NodeHandle, pass: Pass) {
        for x in [left, right] {
            if let Some(p) = self.parent_at_start(x) {
                if !self.is_white(p) {
                    self.captured.push((x, p));
                }
            }
        }
        if self.kind == Some(OpKind::ExtractMin) && matches!(pass, Pass::First | Pass::Second) {
            let c = forest.node(right).expect("live").right_sibling;
            self.pending = Some(PairingInputs {
                pass,
                a: left,
                b: right,
                c,
                winner: left,
                s_a: self.s(left),
                s_b: self.s(right),
                s_c: c.map(|c| self.s(c)),
                s_w: 0,
                s_l: 0,
                white_a: self.is_white(left),
                white_b: self.is_white(right),
            });
        }
    }

    fn after_pairing(&mut self, forest: &Forest, ev: &PairingEvent) {
        let (w, l) = (ev.winner, ev.loser);
        let lv = forest.node(l).expect("live");
        let wv = forest.node(w).expect("live");
        self.s[idx(l)] = u64::from(self.is_white(l)) + self.s_of(lv.leftmost_child) + self.s_of(lv.right_sibling);
        self.s[idx(w)] = u64::from(self.is_white(w)) + self.s(l) + self.s_of(wv.right_sibling);
        self.set_parent(l, Some(w));
        for p in [Some(w), Some(l), wv.right_sibling, wv.parent_or_left_neighbor, lv.right_sibling] {
            self.mark(p);
        }
        if let Some(mut p) = self.pending.take() {
            p.winner = w;
            p.s_w = self.s(w);
            p.s_l = self.s(l);
            let check = check_pairing_rank(&p, self.tolerance);
            if p.pass == Pass::First && check.white_white {
                self.extract.white_white_first += 1;
            }
            self.extract.gain.add(check.gain);
            self.extract.checks.push(check);
        }
    }

    fn node_cut(&mut self, forest: &Forest, cut: &Cut) {
        let x = cut.node;
        let k = self.s(x) - self.s_of(cut.right_sibling);
        let mut y = Some(cut.binary_parent);
        while let Some(p) = y {
            self.s[idx(p)] -= k;
            self.mark(Some(p));
            y = forest.node(p).expect("live").parent_or_left_neighbor;
        }
        self.s[idx(x)] = k;
        self.set_parent(x, None);
        self.mark(Some(x));
        self.mark(cut.right_sibling);
    }

    fn root_removed(&mut self, forest: &Forest, node: NodeHandle, first_child: Option<NodeHandle>) {
        self.mark(Some(node));
        let mut count = 0;
        let mut c = first_child;
        while let Some(x) = c {
            self.set_parent(x, None);
            self.mark(Some(x));
            count += 1;
            c = forest.node(x).expect("live").right_sibling;
        }
        if self.kind == Some(OpKind::ExtractMin) {
            self.extract.children = count;
        }
    }
}
