//! A forest of pairing heaps stored in leftmost-child/right-sibling form.
//!
//! Every node keeps three links: its leftmost child, its right sibling, and
//! `prev`, which is the node's parent in the binary representation (the
//! general-tree parent when the node is a leftmost child, otherwise the
//! sibling immediately to its left). Nodes live in an arena indexed by
//! handle, and handles and heap ids are never reused.
//!
//! Every operation appends an [`OpRecord`] to an internal log with the
//! pairings it performed and its actual cost (pairings + 1). Structural
//! changes can also be observed as they happen through [`ForestObserver`],
//! which is what the potential auditor hooks into.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::key::{Delta, Key, KeyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeHandle(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeapId(pub u64);

impl fmt::Display for NodeHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for HeapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeapError {
    #[error("invalid heap id {0}")]
    InvalidHeap(HeapId),
    #[error("meld of heap {0} with itself")]
    AliasedMeld(HeapId),
    #[error("empty heap {0}")]
    EmptyHeap(HeapId),
    #[error("invalid node handle {0}")]
    InvalidHandle(NodeHandle),
    #[error("node {node} is not in heap {heap}")]
    WrongHeap { node: NodeHandle, heap: HeapId },
    #[error(transparent)]
    Key(#[from] KeyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    MakeHeap,
    Insert,
    Meld,
    FindMin,
    ExtractMin,
    DecreaseKey,
    Delete,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::MakeHeap,
        OpKind::Insert,
        OpKind::Meld,
        OpKind::FindMin,
        OpKind::ExtractMin,
        OpKind::DecreaseKey,
        OpKind::Delete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::MakeHeap => "make_heap",
            OpKind::Insert => "insert",
            OpKind::Meld => "meld",
            OpKind::FindMin => "find_min",
            OpKind::ExtractMin => "extract_min",
            OpKind::DecreaseKey => "decrease_key",
            OpKind::Delete => "delete",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        OpKind::ALL.into_iter().find(|k| k.as_str() == name)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which step of which operation a pairing belongs to.
///
/// The two-pass combine inside `delete` is tagged `first`/`second` like in
/// `extract_min`; only the final pairing with the heap root is `delete`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    First,
    Second,
    Meld,
    Insert,
    DecreaseKey,
    Delete,
}

impl Pass {
    pub fn as_str(self) -> &'static str {
        match self {
            Pass::First => "first",
            Pass::Second => "second",
            Pass::Meld => "meld",
            Pass::Insert => "insert",
            Pass::DecreaseKey => "decrease_key",
            Pass::Delete => "delete",
        }
    }
}

/// One pairing. `left` is the node the pairing is performed on; it wins ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingEvent {
    pub op_index: u64,
    pub pass: Pass,
    pub left: NodeHandle,
    pub right: NodeHandle,
    pub winner: NodeHandle,
    pub loser: NodeHandle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRecord {
    pub actual_cost: u64,
    pub pairings: u64,
    pub heap_size_after: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpRecord {
    /// 1-based position of the operation among successful operations.
    pub op_index: u64,
    pub kind: OpKind,
    pub heap: HeapId,
    pub events: Vec<PairingEvent>,
    pub cost: CostRecord,
}

/// An operation addressed with forest ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    MakeHeap,
    Insert { heap: HeapId, key: Key },
    Meld { heap1: HeapId, heap2: HeapId },
    FindMin { heap: HeapId },
    ExtractMin { heap: HeapId },
    DecreaseKey { heap: HeapId, node: NodeHandle, delta: f64 },
    Delete { heap: HeapId, node: NodeHandle },
}

impl Command {
    pub fn kind(&self) -> OpKind {
        match self {
            Command::MakeHeap => OpKind::MakeHeap,
            Command::Insert { .. } => OpKind::Insert,
            Command::Meld { .. } => OpKind::Meld,
            Command::FindMin { .. } => OpKind::FindMin,
            Command::ExtractMin { .. } => OpKind::ExtractMin,
            Command::DecreaseKey { .. } => OpKind::DecreaseKey,
            Command::Delete { .. } => OpKind::Delete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Heap(HeapId),
    Node(NodeHandle),
    Min(NodeHandle, Key),
    Unit,
}

/// A node detached from its position by `decrease_key` or `delete`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cut {
    pub node: NodeHandle,
    /// `prev` of the node before the cut.
    pub binary_parent: NodeHandle,
    /// Whether the node was the leftmost child of `binary_parent`.
    pub was_leftmost: bool,
    /// Right sibling before the cut; it now takes the node's place.
    pub right_sibling: Option<NodeHandle>,
}

/// Callbacks fired while an operation mutates the forest.
///
/// Each callback sees the forest in a consistent state: `before_pairing`
/// before any link is touched, the others after the change is complete.
#[allow(unused_variables)]
pub trait ForestObserver {
    fn node_created(&mut self, forest: &Forest, node: NodeHandle) {}
    fn before_pairing(&mut self, forest: &Forest, left: NodeHandle, right: NodeHandle, pass: Pass) {}
    fn after_pairing(&mut self, forest: &Forest, event: &PairingEvent) {}
    fn node_cut(&mut self, forest: &Forest, cut: &Cut) {}
    /// `node` is already gone; `first_child` heads its former children,
    /// now a free-standing sibling list.
    fn root_removed(&mut self, forest: &Forest, node: NodeHandle, first_child: Option<NodeHandle>) {}
}

pub struct NoObserver;

impl ForestObserver for NoObserver {}

/// Read-only view of a live node's links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeView {
    pub key: Key,
    pub leftmost_child: Option<NodeHandle>,
    pub right_sibling: Option<NodeHandle>,
    pub parent_or_left_neighbor: Option<NodeHandle>,
}

/// General-tree shape of a heap, for tests and display.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeShape {
    pub handle: NodeHandle,
    pub key: f64,
    pub children: Vec<TreeShape>,
}

impl TreeShape {
    /// Compact `key(child child ...)` rendering.
    pub fn render(&self) -> String {
        if self.children.is_empty() {
            return format!("{}", self.key);
        }
        let inner: Vec<String> = self.children.iter().map(TreeShape::render).collect();
        format!("{}({})", self.key, inner.join(" "))
    }
}

#[derive(Debug, Clone)]
struct Node {
    key: Key,
    child: Option<NodeHandle>,
    sibling: Option<NodeHandle>,
    prev: Option<NodeHandle>,
    /// Owning heap; only kept up to date while the node is a heap root.
    owner: HeapId,
}

#[derive(Debug, Clone)]
enum HeapSlot {
    Live { root: Option<NodeHandle>, size: u64 },
    Melded,
}

struct OpCtx {
    op_index: u64,
    events: Vec<PairingEvent>,
}

#[derive(Debug, Clone, Default)]
pub struct Forest {
    nodes: Vec<Option<Node>>,
    heaps: Vec<HeapSlot>,
    ops: u64,
    log: Vec<OpRecord>,
    last: Option<CostRecord>,
    no_log: bool,
    #[cfg(test)]
    pub(crate) inverted: bool,
}

impl Forest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stop accumulating [`OpRecord`]s; [`Forest::last_cost`] still works.
    pub fn without_event_log(mut self) -> Self {
        self.no_log = true;
        self
    }

    pub fn make_heap(&mut self) -> HeapId {
        match self.apply(Command::MakeHeap, &mut NoObserver) {
            Ok(Outcome::Heap(h)) => h,
            _ => unreachable!("make_heap cannot fail"),
        }
    }

    pub fn insert(&mut self, heap: HeapId, key: Key) -> Result<NodeHandle, HeapError> {
        match self.apply(Command::Insert { heap, key }, &mut NoObserver)? {
            Outcome::Node(p) => Ok(p),
            _ => unreachable!(),
        }
    }

    pub fn meld(&mut self, heap1: HeapId, heap2: HeapId) -> Result<HeapId, HeapError> {
        match self.apply(Command::Meld { heap1, heap2 }, &mut NoObserver)? {
            Outcome::Heap(h) => Ok(h),
            _ => unreachable!(),
        }
    }

    pub fn find_min(&mut self, heap: HeapId) -> Result<(NodeHandle, Key), HeapError> {
        match self.apply(Command::FindMin { heap }, &mut NoObserver)? {
            Outcome::Min(p, k) => Ok((p, k)),
            _ => unreachable!(),
        }
    }

    pub fn extract_min(&mut self, heap: HeapId) -> Result<(NodeHandle, Key), HeapError> {
        match self.apply(Command::ExtractMin { heap }, &mut NoObserver)? {
            Outcome::Min(p, k) => Ok((p, k)),
            _ => unreachable!(),
        }
    }

    pub fn decrease_key(&mut self, heap: HeapId, node: NodeHandle, delta: f64) -> Result<(), HeapError> {
        self.apply(Command::DecreaseKey { heap, node, delta }, &mut NoObserver).map(|_| ())
    }

    pub fn delete(&mut self, heap: HeapId, node: NodeHandle) -> Result<(), HeapError> {
        self.apply(Command::Delete { heap, node }, &mut NoObserver).map(|_| ())
    }

    /// Runs one operation, reporting structural changes to `obs`.
    ///
    /// On error the forest is left untouched and nothing is logged.
    pub fn apply(&mut self, cmd: Command, obs: &mut dyn ForestObserver) -> Result<Outcome, HeapError> {
        self.precheck(&cmd)?;
        self.ops += 1;
        let mut ctx = OpCtx { op_index: self.ops, events: Vec::new() };
        let (heap, outcome) = match cmd {
            Command::MakeHeap => {
                let h = self.new_heap(None, 0);
                (h, Outcome::Heap(h))
            }
            Command::Insert { heap, key } => {
                let p = self.insert_inner(heap, key, &mut ctx, obs);
                (heap, Outcome::Node(p))
            }
            Command::Meld { heap1, heap2 } => {
                let h = self.meld_inner(heap1, heap2, &mut ctx, obs);
                (h, Outcome::Heap(h))
            }
            Command::FindMin { heap } => {
                let root = self.root(heap).expect("prechecked");
                (heap, Outcome::Min(root, self.n(root).key))
            }
            Command::ExtractMin { heap } => {
                let root = self.root(heap).expect("prechecked");
                let key = self.n(root).key;
                self.remove_root_and_combine(heap, root, &mut ctx, obs);
                (heap, Outcome::Min(root, key))
            }
            Command::DecreaseKey { heap, node, delta } => {
                let delta = Delta::new(delta).expect("prechecked");
                self.decrease_key_inner(heap, node, delta, &mut ctx, obs);
                (heap, Outcome::Unit)
            }
            Command::Delete { heap, node } => {
                self.delete_inner(heap, node, &mut ctx, obs);
                (heap, Outcome::Unit)
            }
        };
        let pairings = ctx.events.len() as u64;
        let cost = CostRecord {
            actual_cost: pairings + 1,
            pairings,
            heap_size_after: self.size(heap).unwrap_or(0),
        };
        self.last = Some(cost);
        if !self.no_log {
            self.log.push(OpRecord { op_index: ctx.op_index, kind: cmd.kind(), heap, events: ctx.events, cost });
        }
        Ok(outcome)
    }

    /// Returns and clears the records of all operations since the last drain.
    pub fn drain_events(&mut self) -> Vec<OpRecord> {
        std::mem::take(&mut self.log)
    }

    pub fn last_cost(&self) -> Option<CostRecord> {
        self.last
    }

    /// Number of successful operations so far.
    pub fn op_count(&self) -> u64 {
        self.ops
    }

    // ---- queries -------------------------------------------------------

    pub fn is_live_heap(&self, heap: HeapId) -> bool {
        matches!(self.slot(heap), Some(HeapSlot::Live { .. }))
    }

    pub fn is_live_node(&self, node: NodeHandle) -> bool {
        self.get(node).is_some()
    }

    pub fn live_heaps(&self) -> impl Iterator<Item = HeapId> + '_ {
        self.heaps.iter().enumerate().filter_map(|(i, s)| match s {
            HeapSlot::Live { .. } => Some(HeapId(i as u64 + 1)),
            HeapSlot::Melded => None,
        })
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = NodeHandle> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|_| NodeHandle(i as u64 + 1)))
    }

    /// Upper bound (exclusive) on node handle values issued so far.
    pub fn node_capacity(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn root(&self, heap: HeapId) -> Result<NodeHandle, HeapError> {
        match self.slot(heap) {
            Some(HeapSlot::Live { root: Some(r), .. }) => Ok(*r),
            Some(HeapSlot::Live { root: None, .. }) => Err(HeapError::EmptyHeap(heap)),
            _ => Err(HeapError::InvalidHeap(heap)),
        }
    }

    pub fn root_of(&self, heap: HeapId) -> Option<NodeHandle> {
        match self.slot(heap) {
            Some(HeapSlot::Live { root, .. }) => *root,
            _ => None,
        }
    }

    pub fn size(&self, heap: HeapId) -> Option<u64> {
        match self.slot(heap) {
            Some(HeapSlot::Live { size, .. }) => Some(*size),
            _ => None,
        }
    }

    pub fn node(&self, node: NodeHandle) -> Option<NodeView> {
        self.get(node).map(|n| NodeView {
            key: n.key,
            leftmost_child: n.child,
            right_sibling: n.sibling,
            parent_or_left_neighbor: n.prev,
        })
    }

    pub fn key(&self, node: NodeHandle) -> Option<Key> {
        self.get(node).map(|n| n.key)
    }

    /// Heap containing `node`, found by walking up to the root.
    pub fn heap_of(&self, node: NodeHandle) -> Option<HeapId> {
        let mut cur = node;
        self.get(cur)?;
        while let Some(p) = self.n(cur).prev {
            cur = p;
        }
        let owner = self.n(cur).owner;
        (self.root_of(owner) == Some(cur)).then_some(owner)
    }

    /// General-tree children of `node`, left to right.
    pub fn children(&self, node: NodeHandle) -> Children<'_> {
        Children { forest: self, next: self.get(node).and_then(|n| n.child) }
    }

    pub fn shape(&self, heap: HeapId) -> Option<TreeShape> {
        self.root_of(heap).map(|r| self.shape_of(r))
    }

    pub fn shape_of(&self, node: NodeHandle) -> TreeShape {
        TreeShape {
            handle: node,
            key: self.n(node).key.value(),
            children: self.children(node).map(|c| self.shape_of(c)).collect(),
        }
    }

    /// Full scan for heap order, link consistency, root/size bookkeeping.
    /// Returns a description of every violation found.
    pub fn check_structure(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        for h in self.live_heaps() {
            let (root, size) = match self.slot(h) {
                Some(HeapSlot::Live { root, size }) => (*root, *size),
                _ => unreachable!(),
            };
            let Some(root) = root else {
                if size != 0 {
                    errs.push(format!("{h}: empty but size {size}"));
                }
                continue;
            };
            let Some(rn) = self.get(root) else {
                errs.push(format!("{h}: root {root} is dead"));
                continue;
            };
            if rn.prev.is_some() || rn.sibling.is_some() {
                errs.push(format!("{h}: root {root} has prev or sibling"));
            }
            if rn.owner != h {
                errs.push(format!("{h}: root {root} owned by {}", rn.owner));
            }
            let mut count = 0u64;
            let mut stack = vec![root];
            while let Some(x) = stack.pop() {
                let idx = (x.0 - 1) as usize;
                if seen[idx] {
                    errs.push(format!("{x} reachable twice"));
                    continue;
                }
                seen[idx] = true;
                count += 1;
                let xn = self.n(x);
                let mut expected_prev = x;
                let mut c = xn.child;
                while let Some(ch) = c {
                    let Some(cn) = self.get(ch) else {
                        errs.push(format!("{x} links dead child {ch}"));
                        break;
                    };
                    if cn.prev != Some(expected_prev) {
                        errs.push(format!("{ch}: prev {:?}, expected {expected_prev}", cn.prev));
                    }
                    if cn.key < xn.key {
                        errs.push(format!("heap order: {ch} ({}) under {x} ({})", cn.key, xn.key));
                    }
                    stack.push(ch);
                    expected_prev = ch;
                    c = cn.sibling;
                }
            }
            if count != size {
                errs.push(format!("{h}: size {size} but {count} reachable nodes"));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.is_some() && !seen[i] {
                errs.push(format!("p{} is live but unreachable", i + 1));
            }
        }
        errs
    }

    // ---- internals -----------------------------------------------------

    fn slot(&self, heap: HeapId) -> Option<&HeapSlot> {
        heap.0.checked_sub(1).and_then(|i| self.heaps.get(i as usize))
    }

    fn get(&self, node: NodeHandle) -> Option<&Node> {
        node.0.checked_sub(1).and_then(|i| self.nodes.get(i as usize)).and_then(Option::as_ref)
    }

    fn n(&self, node: NodeHandle) -> &Node {
        self.get(node).expect("live node")
    }

    fn n_mut(&mut self, node: NodeHandle) -> &mut Node {
        self.nodes[(node.0 - 1) as usize].as_mut().expect("live node")
    }

    fn precheck(&self, cmd: &Command) -> Result<(), HeapError> {
        let live = |h: HeapId| -> Result<(), HeapError> {
            if self.is_live_heap(h) {
                Ok(())
            } else {
                Err(HeapError::InvalidHeap(h))
            }
        };
        let member = |h: HeapId, p: NodeHandle| -> Result<(), HeapError> {
            live(h)?;
            match self.heap_of(p) {
                None => Err(HeapError::InvalidHandle(p)),
                Some(owner) if owner != h => Err(HeapError::WrongHeap { node: p, heap: h }),
                Some(_) => Ok(()),
            }
        };
        match *cmd {
            Command::MakeHeap => Ok(()),
            Command::Insert { heap, .. } => live(heap),
            Command::Meld { heap1, heap2 } => {
                if heap1 == heap2 {
                    live(heap1)?;
                    return Err(HeapError::AliasedMeld(heap1));
                }
                live(heap1)?;
                live(heap2)
            }
            Command::FindMin { heap } | Command::ExtractMin { heap } => self.root(heap).map(|_| ()),
            Command::DecreaseKey { heap, node, delta } => {
                member(heap, node)?;
                let delta = Delta::new(delta)?;
                self.n(node).key.decreased_by(delta)?;
                Ok(())
            }
            Command::Delete { heap, node } => member(heap, node),
        }
    }

    fn new_heap(&mut self, root: Option<NodeHandle>, size: u64) -> HeapId {
        self.heaps.push(HeapSlot::Live { root: None, size });
        let h = HeapId(self.heaps.len() as u64);
        self.set_root(h, root);
        h
    }

    fn set_root(&mut self, heap: HeapId, root: Option<NodeHandle>) {
        if let Some(r) = root {
            self.n_mut(r).owner = heap;
        }
        if let HeapSlot::Live { root: slot, .. } = &mut self.heaps[(heap.0 - 1) as usize] {
            *slot = root;
        }
    }

    fn add_size(&mut self, heap: HeapId, delta: i64) {
        if let HeapSlot::Live { size, .. } = &mut self.heaps[(heap.0 - 1) as usize] {
            *size = size.checked_add_signed(delta).expect("heap size underflow");
        }
    }

    fn left_wins(&self, left: NodeHandle, right: NodeHandle) -> bool {
        let wins = self.n(left).key <= self.n(right).key;
        #[cfg(test)]
        if self.inverted {
            return !wins;
        }
        wins
    }

    /// Pairs `left` with `right`. Either both are free-standing roots, or
    /// `right` is the right sibling of `left` in a parentless sibling list;
    /// in the latter case the winner takes `left`'s position in the list.
    fn pair(
        &mut self,
        left: NodeHandle,
        right: NodeHandle,
        pass: Pass,
        ctx: &mut OpCtx,
        obs: &mut dyn ForestObserver,
    ) -> NodeHandle {
        debug_assert!(
            self.n(left).sibling == Some(right)
                || (self.n(left).prev.is_none()
                    && self.n(left).sibling.is_none()
                    && self.n(right).prev.is_none())
        );
        obs.before_pairing(self, left, right, pass);

        let after = self.n(right).sibling;
        let before = self.n(left).prev;
        let (winner, loser) = if self.left_wins(left, right) {
            self.n_mut(left).sibling = after;
            if let Some(c) = after {
                self.n_mut(c).prev = Some(left);
            }
            (left, right)
        } else {
            if let Some(b) = before {
                let bn = self.n_mut(b);
                if bn.child == Some(left) {
                    bn.child = Some(right);
                } else {
                    bn.sibling = Some(right);
                }
            }
            self.n_mut(right).prev = before;
            (right, left)
        };
        // `loser` becomes the leftmost child of `winner`.
        let old_child = self.n(winner).child;
        {
            let l = self.n_mut(loser);
            l.sibling = old_child;
            l.prev = Some(winner);
        }
        if let Some(oc) = old_child {
            self.n_mut(oc).prev = Some(loser);
        }
        self.n_mut(winner).child = Some(loser);

        let event = PairingEvent { op_index: ctx.op_index, pass, left, right, winner, loser };
        ctx.events.push(event);
        obs.after_pairing(self, &event);
        winner
    }

    /// Two-pass combine of the parentless sibling list headed by `head`.
    fn two_pass(
        &mut self,
        head: Option<NodeHandle>,
        ctx: &mut OpCtx,
        obs: &mut dyn ForestObserver,
    ) -> Option<NodeHandle> {
        let head = head?;
        debug_assert!(self.n(head).prev.is_none());
        // Left to right in adjacent pairs; an odd tree out is the rightmost.
        let mut last = head;
        let mut cur = Some(head);
        while let Some(a) = cur {
            match self.n(a).sibling {
                Some(b) => {
                    let w = self.pair(a, b, Pass::First, ctx, obs);
                    last = w;
                    cur = self.n(w).sibling;
                }
                None => {
                    last = a;
                    cur = None;
                }
            }
        }
        // Right to left, folding each tree into the accumulated one.
        let mut acc = last;
        while let Some(left) = self.n(acc).prev {
            acc = self.pair(left, acc, Pass::Second, ctx, obs);
        }
        Some(acc)
    }

    fn new_node(&mut self, key: Key, owner: HeapId) -> NodeHandle {
        self.nodes.push(Some(Node { key, child: None, sibling: None, prev: None, owner }));
        NodeHandle(self.nodes.len() as u64)
    }

    fn insert_inner(&mut self, heap: HeapId, key: Key, ctx: &mut OpCtx, obs: &mut dyn ForestObserver) -> NodeHandle {
        let p = self.new_node(key, heap);
        obs.node_created(self, p);
        let root = match self.root_of(heap) {
            Some(r) => self.pair(p, r, Pass::Insert, ctx, obs),
            None => p,
        };
        self.set_root(heap, Some(root));
        self.add_size(heap, 1);
        p
    }

    fn meld_inner(&mut self, h1: HeapId, h2: HeapId, ctx: &mut OpCtx, obs: &mut dyn ForestObserver) -> HeapId {
        let (r1, r2) = (self.root_of(h1), self.root_of(h2));
        let size = self.size(h1).unwrap_or(0) + self.size(h2).unwrap_or(0);
        self.heaps[(h1.0 - 1) as usize] = HeapSlot::Melded;
        self.heaps[(h2.0 - 1) as usize] = HeapSlot::Melded;
        let root = match (r1, r2) {
            (Some(a), Some(b)) => Some(self.pair(a, b, Pass::Meld, ctx, obs)),
            (a, b) => a.or(b),
        };
        self.new_heap(root, size)
    }

    fn cut(&mut self, node: NodeHandle, obs: &mut dyn ForestObserver) {
        let prev = self.n(node).prev.expect("cut of a root");
        let next = self.n(node).sibling;
        let was_leftmost = self.n(prev).child == Some(node);
        if was_leftmost {
            self.n_mut(prev).child = next;
        } else {
            self.n_mut(prev).sibling = next;
        }
        if let Some(nx) = next {
            self.n_mut(nx).prev = Some(prev);
        }
        let n = self.n_mut(node);
        n.prev = None;
        n.sibling = None;
        obs.node_cut(self, &Cut { node, binary_parent: prev, was_leftmost, right_sibling: next });
    }

    /// Unlinks the free-standing root `node`, frees it and returns the head
    /// of its child list.
    fn unlink_root(&mut self, node: NodeHandle, obs: &mut dyn ForestObserver) -> Option<NodeHandle> {
        let head = self.n(node).child;
        self.nodes[(node.0 - 1) as usize] = None;
        if let Some(c) = head {
            self.n_mut(c).prev = None;
        }
        obs.root_removed(self, node, head);
        head
    }

    fn remove_root_and_combine(
        &mut self,
        heap: HeapId,
        root: NodeHandle,
        ctx: &mut OpCtx,
        obs: &mut dyn ForestObserver,
    ) {
        let head = self.unlink_root(root, obs);
        let new_root = self.two_pass(head, ctx, obs);
        self.set_root(heap, new_root);
        self.add_size(heap, -1);
    }

    fn decrease_key_inner(
        &mut self,
        heap: HeapId,
        node: NodeHandle,
        delta: Delta,
        ctx: &mut OpCtx,
        obs: &mut dyn ForestObserver,
    ) {
        let root = self.root_of(heap).expect("member of a live heap");
        let key = self.n(node).key.decreased_by(delta).expect("prechecked");
        if node == root {
            self.n_mut(node).key = key;
            return;
        }
        self.cut(node, obs);
        self.n_mut(node).key = key;
        let w = self.pair(node, root, Pass::DecreaseKey, ctx, obs);
        self.set_root(heap, Some(w));
    }

    fn delete_inner(&mut self, heap: HeapId, node: NodeHandle, ctx: &mut OpCtx, obs: &mut dyn ForestObserver) {
        let root = self.root_of(heap).expect("member of a live heap");
        if node == root {
            self.remove_root_and_combine(heap, root, ctx, obs);
            return;
        }
        self.cut(node, obs);
        let head = self.unlink_root(node, obs);
        if let Some(survivor) = self.two_pass(head, ctx, obs) {
            let w = self.pair(survivor, root, Pass::Delete, ctx, obs);
            self.set_root(heap, Some(w));
        }
        self.add_size(heap, -1);
    }
}

pub struct Children<'a> {
    forest: &'a Forest,
    next: Option<NodeHandle>,
}

impl Iterator for Children<'_> {
    type Item = NodeHandle;

    fn next(&mut self) -> Option<NodeHandle> {
        let cur = self.next?;
        self.next = self.forest.n(cur).sibling;
        Some(cur)
    }
}
