//! The potential function over a forest of pairing heaps.
//!
//! Every node is colored once for the whole trace: white if it is removed at
//! some point, black if it survives to the end. With `s(x)` the number of
//! white nodes in `x`'s subtree of the binary (leftmost-child/right-sibling)
//! representation, a white node carries
//!
//! * rank potential `18·log₂ s(x)`,
//! * weight potential 6 unless it is heavy (`s(left child) ≥ s(right child)`),
//! * capture potential 6 unless its general-tree parent is black,
//! * triple-white potential 6 unless both its immediate siblings are white,
//!
//! while a black node carries only its capture potential. A heap with `n`
//! white nodes carries `8 − 36·Σ_{i=1..n} log₂ i`. Φ is the sum of all of it.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::heap::{Forest, HeapId, NodeHandle};
use crate::trace::{Operation, ReplayError, Replayer, StepOutcome, Trace};

pub const RANK_FACTOR: f64 = 18.0;
pub const WEIGHT_POTENTIAL: f64 = 6.0;
pub const CAPTURE_POTENTIAL: f64 = 6.0;
pub const TRIPLE_WHITE_POTENTIAL: f64 = 6.0;
pub const HEAP_BASE: f64 = 8.0;
pub const HEAP_FACTOR: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

/// Color of every node a trace inserts, keyed by the trace's node ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColorMap {
    colors: HashMap<NodeHandle, Color>,
}

impl ColorMap {
    pub fn get(&self, node: NodeHandle) -> Option<Color> {
        self.colors.get(&node).copied()
    }

    pub fn is_white(&self, node: NodeHandle) -> bool {
        self.get(node) == Some(Color::White)
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn white_count(&self) -> usize {
        self.colors.values().filter(|c| **c == Color::White).count()
    }
}

/// Replays `trace` once and colors every removed node white, every survivor
/// black. Fails at the first invalid operation (1-based index).
pub fn color_nodes(trace: &Trace) -> Result<ColorMap, (usize, ReplayError)> {
    let mut rp = Replayer::new();
    let mut inserted = Vec::new();
    let mut removed = HashSet::new();
    for (i, op) in trace.ops.iter().enumerate() {
        let out = rp.step(op).map_err(|e| (i + 1, e))?;
        match (*op, out) {
            (Operation::Insert { node_out, .. }, _) => inserted.push(node_out),
            (Operation::ExtractMin { .. }, StepOutcome::Min(p, _)) => {
                removed.insert(p);
            }
            (Operation::Delete { node, .. }, _) => {
                removed.insert(node);
            }
            _ => {}
        }
    }
    let colors = inserted
        .into_iter()
        .map(|p| (p, if removed.contains(&p) { Color::White } else { Color::Black }))
        .collect();
    Ok(ColorMap { colors })
}

/// `log₂ s`, with `s` clamped to at least 1.
///
/// White nodes always have `s ≥ 1`; the clamp only matters for black nodes
/// without white descendants and for the imaginary lone black node that
/// stands in for a missing right sibling, whose log term is taken as 0.
pub fn lg(s: u64) -> f64 {
    (s.max(1) as f64).log2()
}

pub fn rank(s: u64, white: bool) -> f64 {
    if white {
        RANK_FACTOR * lg(s)
    } else {
        0.0
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Table of `Σ_{i=1..n} log₂ i`, grown on demand.
#[derive(Debug, Clone)]
pub(crate) struct LogFactorials {
    table: Vec<f64>,
    acc: CompensatedSum,
}

impl Default for LogFactorials {
    fn default() -> Self {
        LogFactorials { table: vec![0.0], acc: CompensatedSum::default() }
    }
}

impl LogFactorials {
    pub(crate) fn get(&mut self, n: u64) -> f64 {
        let n = n as usize;
        while self.table.len() <= n {
            self.acc.add((self.table.len() as f64).log2());
            self.table.push(self.acc.value());
        }
        self.table[n]
    }

    pub(crate) fn heap_potential(&mut self, whites: u64) -> f64 {
        HEAP_BASE - HEAP_FACTOR * self.get(whites)
    }
}

/// Potential of a single heap holding `whites` white nodes.
pub fn heap_potential(whites: u64) -> f64 {
    LogFactorials::default().heap_potential(whites)
}

/// Every component of one node's potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeAnnotation {
    pub node: NodeHandle,
    pub heap: HeapId,
    pub color: Color,
    pub s: u64,
    pub rank: f64,
    pub heavy: bool,
    pub weight_pot: f64,
    pub captured: bool,
    pub capture_pot: f64,
    pub triple_white: bool,
    pub tw_pot: f64,
    pub potential: f64,
}

/// What a node's potential depends on.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeInputs {
    pub white: bool,
    pub s: u64,
    pub s_child: u64,
    pub s_sibling: u64,
    /// Color of the general-tree parent, if any (`true` = white).
    pub parent_white: Option<bool>,
    pub left_white: Option<bool>,
    pub right_white: Option<bool>,
}

pub(crate) fn annotate(node: NodeHandle, heap: HeapId, i: NodeInputs) -> NodeAnnotation {
    let captured = i.parent_white == Some(false);
    let capture_pot = if captured { 0.0 } else { CAPTURE_POTENTIAL };
    if !i.white {
        return NodeAnnotation {
            node,
            heap,
            color: Color::Black,
            s: i.s,
            rank: 0.0,
            heavy: false,
            weight_pot: 0.0,
            captured,
            capture_pot,
            triple_white: false,
            tw_pot: 0.0,
            potential: capture_pot,
        };
    }
    let heavy = i.s_child >= i.s_sibling;
    let weight_pot = if heavy { 0.0 } else { WEIGHT_POTENTIAL };
    let triple_white = i.left_white == Some(true) && i.right_white == Some(true);
    let tw_pot = if triple_white { 0.0 } else { TRIPLE_WHITE_POTENTIAL };
    let rank = rank(i.s, true);
    NodeAnnotation {
        node,
        heap,
        color: Color::White,
        s: i.s,
        rank,
        heavy,
        weight_pot,
        captured,
        capture_pot,
        triple_white,
        tw_pot,
        potential: rank + weight_pot + capture_pot + tw_pot,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeapAnnotation {
    pub heap: HeapId,
    pub root: Option<NodeHandle>,
    pub whites: u64,
    pub potential: f64,
}

/// The full potential of a forest at one moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSnapshot {
    /// Sorted by node handle.
    pub nodes: Vec<NodeAnnotation>,
    pub heaps: Vec<HeapAnnotation>,
    pub phi: f64,
}

impl PotentialSnapshot {
    pub fn node(&self, node: NodeHandle) -> Option<&NodeAnnotation> {
        self.nodes.binary_search_by_key(&node, |a| a.node).ok().map(|i| &self.nodes[i])
    }

    pub fn heap(&self, heap: HeapId) -> Option<&HeapAnnotation> {
        self.heaps.iter().find(|h| h.heap == heap)
    }
}

/// Computes the potential of `forest` from scratch. `is_white` gives the
/// color of each live node, addressed by forest handle.
pub fn snapshot_potential(forest: &Forest, is_white: impl Fn(NodeHandle) -> bool) -> PotentialSnapshot {
    let cap = forest.node_capacity();
    let mut s = vec![0u64; cap];
    let mut logf = LogFactorials::default();
    let mut nodes = Vec::new();
    let mut heaps = Vec::new();
    let mut phi = CompensatedSum::default();
    let idx = |p: NodeHandle| (p.0 - 1) as usize;

    for h in forest.live_heaps() {
        let root = forest.root_of(h);
        // Preorder over the binary tree, remembering each node's general
        // parent and left sibling on the way down.
        let mut order: Vec<(NodeHandle, Option<NodeHandle>, Option<NodeHandle>)> = Vec::new();
        let mut stack: Vec<(NodeHandle, Option<NodeHandle>, Option<NodeHandle>)> = root.map(|r| (r, None, None)).into_iter().collect();
        while let Some((x, parent, left)) = stack.pop() {
            let v = forest.node(x).expect("reachable nodes are live");
            if let Some(r) = v.right_sibling {
                stack.push((r, parent, Some(x)));
            }
            if let Some(c) = v.leftmost_child {
                stack.push((c, Some(x), None));
            }
            order.push((x, parent, left));
        }
        for &(x, _, _) in order.iter().rev() {
            let v = forest.node(x).expect("live");
            let sub = |q: Option<NodeHandle>| q.map_or(0, |q| s[idx(q)]);
            s[idx(x)] = u64::from(is_white(x)) + sub(v.leftmost_child) + sub(v.right_sibling);
        }
        for &(x, parent, left) in &order {
            let v = forest.node(x).expect("live");
            let sub = |q: Option<NodeHandle>| q.map_or(0, |q| s[idx(q)]);
            let a = annotate(
                x,
                h,
                NodeInputs {
                    white: is_white(x),
                    s: s[idx(x)],
                    s_child: sub(v.leftmost_child),
                    s_sibling: sub(v.right_sibling),
                    parent_white: parent.map(&is_white),
                    left_white: left.map(&is_white),
                    right_white: v.right_sibling.map(&is_white),
                },
            );
            phi.add(a.potential);
            nodes.push(a);
        }
        let whites = root.map_or(0, |r| s[idx(r)]);
        let potential = logf.heap_potential(whites);
        phi.add(potential);
        heaps.push(HeapAnnotation { heap: h, root, whites, potential });
    }
    nodes.sort_by_key(|a| a.node);
    PotentialSnapshot { nodes, heaps, phi: phi.value() }
}

/// Structural facts the potential function relies on: `s` never grows
/// going down the binary tree, white nodes have `s ≥ 1`, white roots are
/// heavy, no node has more than `⌊log₂ n⌋ + 1` heavy children (`n` = white
/// nodes in its heap), and a black node carries only capture potential.
pub fn snapshot_invariants(forest: &Forest, snap: &PotentialSnapshot) -> Vec<String> {
    let mut errs = Vec::new();
    let s_of = |q: Option<NodeHandle>| q.and_then(|q| snap.node(q)).map_or(0, |a| a.s);
    for a in &snap.nodes {
        let v = forest.node(a.node).expect("snapshot of a live node");
        if a.color == Color::White && a.s == 0 {
            errs.push(format!("{}: white with s = 0", a.node));
        }
        for q in [v.leftmost_child, v.right_sibling] {
            if s_of(q) > a.s {
                errs.push(format!("{}: s = {} below a binary descendant with s = {}", a.node, a.s, s_of(q)));
            }
        }
        if a.color == Color::Black && a.potential != a.capture_pot {
            errs.push(format!("{}: black node potential {} is not its capture potential", a.node, a.potential));
        }
        if v.parent_or_left_neighbor.is_none() && a.color == Color::White && !a.heavy {
            errs.push(format!("{}: white root is light", a.node));
        }
        let whites = snap.heap(a.heap).map_or(0, |h| h.whites);
        let heavy = forest.children(a.node).filter(|c| snap.node(*c).is_some_and(|c| c.heavy)).count() as u64;
        let limit = if whites == 0 { 0 } else { u64::from(whites.ilog2()) + 1 };
        if heavy > limit {
            errs.push(format!("{}: {heavy} heavy children, limit {limit} for n = {whites}", a.node));
        }
    }
    errs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::Key;

    fn k(v: f64) -> Key {
        Key::new(v).unwrap()
    }

    #[test]
    fn single_white_node() {
        let mut f = Forest::new();
        let h = f.make_heap();
        f.insert(h, k(5.0)).unwrap();
        let snap = snapshot_potential(&f, |_| true);
        let a = snap.nodes[0];
        assert_eq!((a.rank, a.weight_pot, a.capture_pot, a.tw_pot), (0.0, 0.0, 6.0, 6.0));
        assert_eq!(a.potential, 12.0);
        assert_eq!(snap.heaps[0].potential, 8.0);
        assert_eq!(snap.phi, 20.0);
    }

    #[test]
    fn single_black_node() {
        let mut f = Forest::new();
        let h = f.make_heap();
        f.insert(h, k(5.0)).unwrap();
        let snap = snapshot_potential(&f, |_| false);
        assert_eq!(snap.nodes[0].potential, 6.0);
        assert_eq!(snap.phi, 14.0);
    }

    #[test]
    fn meld_of_two_white_singletons() {
        let mut f = Forest::new();
        let h1 = f.make_heap();
        f.insert(h1, k(1.0)).unwrap();
        let h2 = f.make_heap();
        f.insert(h2, k(2.0)).unwrap();
        let before = snapshot_potential(&f, |_| true);
        assert_eq!(before.phi, 40.0);
        f.meld(h1, h2).unwrap();
        let after = snapshot_potential(&f, |_| true);
        assert_eq!(after.heaps[0].potential, -28.0);
        assert_eq!(after.nodes[0].potential, 30.0);
        assert_eq!(after.nodes[1].potential, 12.0);
        assert_eq!(after.phi, 14.0);
        assert_eq!(after.phi - before.phi, -26.0);
    }

    #[test]
    fn empty_heap_has_potential_eight() {
        let mut f = Forest::new();
        f.make_heap();
        assert_eq!(snapshot_potential(&f, |_| true).phi, 8.0);
        assert_eq!(snapshot_potential(&Forest::new(), |_| true).phi, 0.0);
    }

    #[test]
    fn heap_potential_values() {
        assert_eq!(heap_potential(0), 8.0);
        assert_eq!(heap_potential(1), 8.0);
        assert_eq!(heap_potential(2), -28.0);
        let expect = 8.0 - 36.0 * (2f64.log2() + 3f64.log2() + 4f64.log2());
        assert!((heap_potential(4) - expect).abs() < 1e-12);
    }

    #[test]
    fn triple_white_and_capture() {
        // Each insert under root 0 becomes its new leftmost child.
        let mut f = Forest::new();
        let h = f.make_heap();
        let root = f.insert(h, k(0.0)).unwrap();
        let ids: Vec<_> = [1.0, 2.0, 3.0, 4.0].iter().map(|v| f.insert(h, k(*v)).unwrap()).collect();
        assert_eq!(f.shape(h).unwrap().render(), "0(4 3 2 1)");
        // All white: the two middle children are triple white.
        let snap = snapshot_potential(&f, |_| true);
        let tw: Vec<bool> = ids.iter().map(|p| snap.node(*p).unwrap().triple_white).collect();
        assert_eq!(tw, vec![false, true, true, false]);
        // Black root captures every child.
        let snap = snapshot_potential(&f, |p| p != root);
        assert!(ids.iter().all(|p| snap.node(*p).unwrap().captured));
        assert!(!snap.node(root).unwrap().captured);
        assert!(snapshot_invariants(&f, &snap).is_empty());
    }

    #[test]
    fn compensated_sum_cancels() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
