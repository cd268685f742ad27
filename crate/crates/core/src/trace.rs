//! Operation traces: the line-delimited text format, replay against a
//! [`Forest`], and validation.
//!
//! One record per line, fields in this order:
//!
//! ```text
//! {"op":"make_heap","heap_out":H}
//! {"op":"insert","heap":H,"key":K,"node_out":P}
//! {"op":"meld","heap1":H1,"heap2":H2,"heap_out":H}
//! {"op":"find_min","heap":H}
//! {"op":"extract_min","heap":H}
//! {"op":"decrease_key","heap":H,"node":P,"delta":D}
//! {"op":"delete","heap":H,"node":P}
//! ```
//!
//! Ids are positive integers chosen by the trace, so replay never depends
//! on how a particular implementation allocates handles. Numbers are
//! written as the shortest decimal that reads back to the same `f64`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::heap::{Command, Forest, ForestObserver, HeapError, HeapId, NoObserver, NodeHandle, OpKind, Outcome};
use crate::key::{Delta, Key, KeyError};

/// One operation, addressed with trace ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operation {
    MakeHeap { heap_out: HeapId },
    Insert { heap: HeapId, key: Key, node_out: NodeHandle },
    Meld { heap1: HeapId, heap2: HeapId, heap_out: HeapId },
    FindMin { heap: HeapId },
    ExtractMin { heap: HeapId },
    DecreaseKey { heap: HeapId, node: NodeHandle, delta: Delta },
    Delete { heap: HeapId, node: NodeHandle },
}

impl Operation {
    pub fn kind(&self) -> OpKind {
        match self {
            Operation::MakeHeap { .. } => OpKind::MakeHeap,
            Operation::Insert { .. } => OpKind::Insert,
            Operation::Meld { .. } => OpKind::Meld,
            Operation::FindMin { .. } => OpKind::FindMin,
            Operation::ExtractMin { .. } => OpKind::ExtractMin,
            Operation::DecreaseKey { .. } => OpKind::DecreaseKey,
            Operation::Delete { .. } => OpKind::Delete,
        }
    }

    /// Canonical single-line form, without the trailing newline.
    pub fn to_line(&self) -> String {
        match *self {
            Operation::MakeHeap { heap_out } => format!(r#"{{"op":"make_heap","heap_out":{}}}"#, heap_out.0),
            Operation::Insert { heap, key, node_out } => {
                format!(r#"{{"op":"insert","heap":{},"key":{},"node_out":{}}}"#, heap.0, key, node_out.0)
            }
            Operation::Meld { heap1, heap2, heap_out } => format!(
                r#"{{"op":"meld","heap1":{},"heap2":{},"heap_out":{}}}"#,
                heap1.0, heap2.0, heap_out.0
            ),
            Operation::FindMin { heap } => format!(r#"{{"op":"find_min","heap":{}}}"#, heap.0),
            Operation::ExtractMin { heap } => format!(r#"{{"op":"extract_min","heap":{}}}"#, heap.0),
            Operation::DecreaseKey { heap, node, delta } => format!(
                r#"{{"op":"decrease_key","heap":{},"node":{},"delta":{}}}"#,
                heap.0, node.0, delta
            ),
            Operation::Delete { heap, node } => format!(r#"{{"op":"delete","heap":{},"node":{}}}"#, heap.0, node.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub ops: Vec<Operation>,
}

impl Trace {
    pub fn new(ops: Vec<Operation>) -> Self {
        Trace { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown op {0:?}")]
    UnknownOp(String),
    #[error("{op} requires field {field:?}")]
    MissingField { op: &'static str, field: &'static str },
    #[error("{op} does not take field {field:?}")]
    UnexpectedField { op: &'static str, field: &'static str },
    #[error("ids must be positive integers")]
    ZeroId,
    #[error(transparent)]
    Key(#[from] KeyError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    op: String,
    heap: Option<u64>,
    heap1: Option<u64>,
    heap2: Option<u64>,
    heap_out: Option<u64>,
    node: Option<u64>,
    node_out: Option<u64>,
    key: Option<f64>,
    delta: Option<f64>,
}

impl RawRecord {
    fn into_operation(self) -> Result<Operation, ParseErrorKind> {
        let kind = OpKind::from_name(&self.op).ok_or_else(|| ParseErrorKind::UnknownOp(self.op.clone()))?;
        let op = kind.as_str();
        let present: [(&'static str, bool); 8] = [
            ("heap", self.heap.is_some()),
            ("heap1", self.heap1.is_some()),
            ("heap2", self.heap2.is_some()),
            ("heap_out", self.heap_out.is_some()),
            ("node", self.node.is_some()),
            ("node_out", self.node_out.is_some()),
            ("key", self.key.is_some()),
            ("delta", self.delta.is_some()),
        ];
        let wanted: &[&str] = match kind {
            OpKind::MakeHeap => &["heap_out"],
            OpKind::Insert => &["heap", "key", "node_out"],
            OpKind::Meld => &["heap1", "heap2", "heap_out"],
            OpKind::FindMin | OpKind::ExtractMin => &["heap"],
            OpKind::DecreaseKey => &["heap", "node", "delta"],
            OpKind::Delete => &["heap", "node"],
        };
        for (field, is_present) in present {
            let is_wanted = wanted.contains(&field);
            if is_wanted && !is_present {
                return Err(ParseErrorKind::MissingField { op, field });
            }
            if !is_wanted && is_present {
                return Err(ParseErrorKind::UnexpectedField { op, field });
            }
        }
        let id = |v: Option<u64>| match v {
            Some(0) => Err(ParseErrorKind::ZeroId),
            Some(v) => Ok(v),
            None => unreachable!("arity checked"),
        };
        let heap = |v| id(v).map(HeapId);
        let node = |v| id(v).map(NodeHandle);
        Ok(match kind {
            OpKind::MakeHeap => Operation::MakeHeap { heap_out: heap(self.heap_out)? },
            OpKind::Insert => Operation::Insert {
                heap: heap(self.heap)?,
                key: Key::new(self.key.unwrap_or_default())?,
                node_out: node(self.node_out)?,
            },
            OpKind::Meld => Operation::Meld {
                heap1: heap(self.heap1)?,
                heap2: heap(self.heap2)?,
                heap_out: heap(self.heap_out)?,
            },
            OpKind::FindMin => Operation::FindMin { heap: heap(self.heap)? },
            OpKind::ExtractMin => Operation::ExtractMin { heap: heap(self.heap)? },
            OpKind::DecreaseKey => Operation::DecreaseKey {
                heap: heap(self.heap)?,
                node: node(self.node)?,
                delta: Delta::new(self.delta.unwrap_or_default())?,
            },
            OpKind::Delete => Operation::Delete { heap: heap(self.heap)?, node: node(self.node)? },
        })
    }
}

pub fn parse_operation(line: &str) -> Result<Operation, ParseErrorKind> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| ParseErrorKind::Syntax(e.to_string()))?;
    raw.into_operation()
}

/// Parses a trace. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let op = parse_operation(line).map_err(|kind| ParseError { line: i + 1, kind })?;
        ops.push(op);
    }
    Ok(Trace { ops })
}

pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for op in &trace.ops {
        let _ = writeln!(out, "{}", op.to_line());
    }
    out
}

/// Why an operation could not be replayed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("stale heap id {0}")]
    StaleHeap(HeapId),
    #[error("unknown heap id {0}")]
    UnknownHeap(HeapId),
    #[error("heap id {0} already used")]
    DuplicateHeapId(HeapId),
    #[error("node id {0} already used")]
    DuplicateNodeId(NodeHandle),
    #[error("meld of heap {0} with itself")]
    MeldAliasing(HeapId),
    #[error("empty heap {0}")]
    EmptyHeap(HeapId),
    #[error("unknown node {0}")]
    UnknownNode(NodeHandle),
    #[error("node {0} was already removed")]
    RemovedNode(NodeHandle),
    #[error("node {node} is not in heap {heap}")]
    WrongHeap { node: NodeHandle, heap: HeapId },
    #[error(transparent)]
    Key(#[from] KeyError),
}

/// Result of one replayed operation, in trace ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Heap(HeapId),
    Node(NodeHandle),
    Min(NodeHandle, Key),
    Unit,
}

/// Replays trace operations on a [`Forest`], translating between trace ids
/// and the forest's own handles.
#[derive(Debug, Default)]
pub struct Replayer {
    forest: Forest,
    heaps: HashMap<HeapId, HeapId>,
    retired: HashSet<HeapId>,
    nodes: HashMap<NodeHandle, NodeHandle>,
    removed: HashSet<NodeHandle>,
    back: Vec<NodeHandle>,
}

impl Replayer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_forest(forest: Forest) -> Self {
        Replayer { forest, ..Self::default() }
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn forest_mut(&mut self) -> &mut Forest {
        &mut self.forest
    }

    pub fn into_forest(self) -> Forest {
        self.forest
    }

    /// Forest heap currently bound to a trace heap id.
    pub fn heap(&self, id: HeapId) -> Option<HeapId> {
        self.heaps.get(&id).copied()
    }

    pub fn node(&self, id: NodeHandle) -> Option<NodeHandle> {
        self.nodes.get(&id).copied()
    }

    /// Trace id of a forest node.
    pub fn trace_node(&self, forest_node: NodeHandle) -> NodeHandle {
        self.back[(forest_node.0 - 1) as usize]
    }

    pub fn trace_heap(&self, forest_heap: HeapId) -> Option<HeapId> {
        self.heaps.iter().find(|(_, f)| **f == forest_heap).map(|(t, _)| *t)
    }

    fn resolve_heap(&self, id: HeapId) -> Result<HeapId, ReplayError> {
        match self.heaps.get(&id) {
            Some(h) => Ok(*h),
            None if self.retired.contains(&id) => Err(ReplayError::StaleHeap(id)),
            None => Err(ReplayError::UnknownHeap(id)),
        }
    }

    fn resolve_node(&self, id: NodeHandle) -> Result<NodeHandle, ReplayError> {
        match self.nodes.get(&id) {
            Some(p) => Ok(*p),
            None if self.removed.contains(&id) => Err(ReplayError::RemovedNode(id)),
            None => Err(ReplayError::UnknownNode(id)),
        }
    }

    fn fresh_heap(&self, id: HeapId) -> Result<(), ReplayError> {
        if self.heaps.contains_key(&id) || self.retired.contains(&id) {
            Err(ReplayError::DuplicateHeapId(id))
        } else {
            Ok(())
        }
    }

    /// Translates a trace operation into a forest command without running it.
    pub fn command(&self, op: &Operation) -> Result<Command, ReplayError> {
        Ok(match *op {
            Operation::MakeHeap { heap_out } => {
                self.fresh_heap(heap_out)?;
                Command::MakeHeap
            }
            Operation::Insert { heap, key, node_out } => {
                let heap = self.resolve_heap(heap)?;
                if self.nodes.contains_key(&node_out) || self.removed.contains(&node_out) {
                    return Err(ReplayError::DuplicateNodeId(node_out));
                }
                Command::Insert { heap, key }
            }
            Operation::Meld { heap1, heap2, heap_out } => {
                let a = self.resolve_heap(heap1)?;
                let b = self.resolve_heap(heap2)?;
                if heap1 == heap2 {
                    return Err(ReplayError::MeldAliasing(heap1));
                }
                self.fresh_heap(heap_out)?;
                if heap_out == heap1 || heap_out == heap2 {
                    return Err(ReplayError::DuplicateHeapId(heap_out));
                }
                Command::Meld { heap1: a, heap2: b }
            }
            Operation::FindMin { heap } => Command::FindMin { heap: self.resolve_heap(heap)? },
            Operation::ExtractMin { heap } => Command::ExtractMin { heap: self.resolve_heap(heap)? },
            Operation::DecreaseKey { heap, node, delta } => Command::DecreaseKey {
                heap: self.resolve_heap(heap)?,
                node: self.resolve_node(node)?,
                delta: delta.value(),
            },
            Operation::Delete { heap, node } => {
                Command::Delete { heap: self.resolve_heap(heap)?, node: self.resolve_node(node)? }
            }
        })
    }

    pub fn step(&mut self, op: &Operation) -> Result<StepOutcome, ReplayError> {
        self.step_observed(op, &mut NoObserver)
    }

    /// Runs one operation. On error nothing changes.
    pub fn step_observed(&mut self, op: &Operation, obs: &mut dyn ForestObserver) -> Result<StepOutcome, ReplayError> {
        let cmd = self.command(op)?;
        let outcome = self.forest.apply(cmd, obs).map_err(|e| self.translate(e, op))?;
        Ok(match (*op, outcome) {
            (Operation::MakeHeap { heap_out }, Outcome::Heap(h)) => {
                self.heaps.insert(heap_out, h);
                StepOutcome::Heap(heap_out)
            }
            (Operation::Meld { heap1, heap2, heap_out }, Outcome::Heap(h)) => {
                for old in [heap1, heap2] {
                    self.heaps.remove(&old);
                    self.retired.insert(old);
                }
                self.heaps.insert(heap_out, h);
                StepOutcome::Heap(heap_out)
            }
            (Operation::Insert { node_out, .. }, Outcome::Node(p)) => {
                self.nodes.insert(node_out, p);
                let idx = (p.0 - 1) as usize;
                if self.back.len() <= idx {
                    self.back.resize(idx + 1, NodeHandle(0));
                }
                self.back[idx] = node_out;
                StepOutcome::Node(node_out)
            }
            (Operation::ExtractMin { .. }, Outcome::Min(p, key)) => {
                let id = self.trace_node(p);
                self.nodes.remove(&id);
                self.removed.insert(id);
                StepOutcome::Min(id, key)
            }
            (Operation::FindMin { .. }, Outcome::Min(p, key)) => StepOutcome::Min(self.trace_node(p), key),
            (Operation::Delete { node, .. }, _) => {
                self.nodes.remove(&node);
                self.removed.insert(node);
                StepOutcome::Unit
            }
            (_, _) => StepOutcome::Unit,
        })
    }

    fn translate(&self, err: HeapError, op: &Operation) -> ReplayError {
        match err {
            HeapError::InvalidHeap(_) | HeapError::AliasedMeld(_) => {
                unreachable!("heap ids are resolved before the forest sees them")
            }
            HeapError::EmptyHeap(_) => match *op {
                Operation::FindMin { heap } | Operation::ExtractMin { heap } => ReplayError::EmptyHeap(heap),
                _ => unreachable!(),
            },
            HeapError::InvalidHandle(p) => ReplayError::UnknownNode(self.trace_node(p)),
            HeapError::WrongHeap { .. } => match *op {
                Operation::DecreaseKey { heap, node, .. } | Operation::Delete { heap, node } => {
                    ReplayError::WrongHeap { node, heap }
                }
                _ => unreachable!(),
            },
            HeapError::Key(k) => ReplayError::Key(k),
        }
    }
}

/// Replays a whole trace, failing at the first bad operation.
pub fn replay(trace: &Trace) -> Result<Replayer, (usize, ReplayError)> {
    let mut r = Replayer::new();
    for (i, op) in trace.ops.iter().enumerate() {
        r.step(op).map_err(|e| (i + 1, e))?;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("op {op_index}: {error}")]
pub struct Violation {
    /// 1-based position in the trace.
    pub op_index: usize,
    pub error: ReplayError,
}

/// Replays the trace, skipping operations that are not applicable, and
/// reports every one of them.
pub fn validate_trace(trace: &Trace) -> Result<(), Vec<Violation>> {
    let mut r = Replayer::with_forest(Forest::new().without_event_log());
    let mut violations = Vec::new();
    for (i, op) in trace.ops.iter().enumerate() {
        if let Err(error) = r.step(op) {
            violations.push(Violation { op_index: i + 1, error });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Node population counts of a valid trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceStats {
    pub inserted: usize,
    pub removed: usize,
}

impl TraceStats {
    pub fn survivors(&self) -> usize {
        self.inserted - self.removed
    }

    pub fn survivor_fraction(&self) -> f64 {
        if self.inserted == 0 {
            1.0
        } else {
            self.survivors() as f64 / self.inserted as f64
        }
    }
}

pub fn trace_stats(trace: &Trace) -> TraceStats {
    let mut stats = TraceStats::default();
    for op in &trace.ops {
        match op {
            Operation::Insert { .. } => stats.inserted += 1,
            Operation::ExtractMin { .. } | Operation::Delete { .. } => stats.removed += 1,
            _ => {}
        }
    }
    stats
}
