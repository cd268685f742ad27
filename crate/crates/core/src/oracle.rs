//! Brute-force reference priority queue for differential testing.
//!
//! Each heap is a plain list of `(node, key)` pairs and every query is a
//! linear scan. Ids are the trace's own ids.

use std::collections::{HashMap, HashSet};

use crate::heap::{HeapId, NodeHandle, OpKind};
use crate::key::Key;
use crate::trace::{Operation, ReplayError, Replayer, StepOutcome, Trace};

#[derive(Debug, Default, Clone)]
pub struct OracleForest {
    heaps: HashMap<HeapId, Vec<(NodeHandle, Key)>>,
    retired: HashSet<HeapId>,
    node_heap: HashMap<NodeHandle, HeapId>,
    removed: HashSet<NodeHandle>,
}

impl OracleForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contents(&self, heap: HeapId) -> Option<&[(NodeHandle, Key)]> {
        self.heaps.get(&heap).map(Vec::as_slice)
    }

    fn heap(&self, id: HeapId) -> Result<&Vec<(NodeHandle, Key)>, ReplayError> {
        self.heaps.get(&id).ok_or(if self.retired.contains(&id) {
            ReplayError::StaleHeap(id)
        } else {
            ReplayError::UnknownHeap(id)
        })
    }

    fn fresh_heap(&self, id: HeapId) -> Result<(), ReplayError> {
        if self.heaps.contains_key(&id) || self.retired.contains(&id) {
            Err(ReplayError::DuplicateHeapId(id))
        } else {
            Ok(())
        }
    }

    fn member(&self, heap: HeapId, node: NodeHandle) -> Result<usize, ReplayError> {
        let items = self.heap(heap)?;
        match self.node_heap.get(&node) {
            None if self.removed.contains(&node) => Err(ReplayError::RemovedNode(node)),
            None => Err(ReplayError::UnknownNode(node)),
            Some(h) if *h != heap => Err(ReplayError::WrongHeap { node, heap }),
            Some(_) => Ok(items.iter().position(|(p, _)| *p == node).expect("node recorded in its heap")),
        }
    }

    /// Minimum key of `heap` and every node holding it, in insertion order.
    pub fn min_group(&self, heap: HeapId) -> Result<(Key, Vec<NodeHandle>), ReplayError> {
        let items = self.heap(heap)?;
        let min = items.iter().map(|(_, k)| *k).min().ok_or(ReplayError::EmptyHeap(heap))?;
        let group = items.iter().filter(|(_, k)| *k == min).map(|(p, _)| *p).collect();
        Ok((min, group))
    }

    /// Removes `node` from `heap` without further checks.
    pub fn remove(&mut self, heap: HeapId, node: NodeHandle) -> Result<(), ReplayError> {
        let i = self.member(heap, node)?;
        self.heaps.get_mut(&heap).expect("checked").swap_remove(i);
        self.node_heap.remove(&node);
        self.removed.insert(node);
        Ok(())
    }

    /// Applies one operation. On a key tie `extract_min` and `find_min`
    /// pick the lowest node id among the minima.
    pub fn apply(&mut self, op: &Operation) -> Result<StepOutcome, ReplayError> {
        match *op {
            Operation::MakeHeap { heap_out } => {
                self.fresh_heap(heap_out)?;
                self.heaps.insert(heap_out, Vec::new());
                Ok(StepOutcome::Heap(heap_out))
            }
            Operation::Insert { heap, key, node_out } => {
                self.heap(heap)?;
                if self.node_heap.contains_key(&node_out) || self.removed.contains(&node_out) {
                    return Err(ReplayError::DuplicateNodeId(node_out));
                }
                self.heaps.get_mut(&heap).expect("checked").push((node_out, key));
                self.node_heap.insert(node_out, heap);
                Ok(StepOutcome::Node(node_out))
            }
            Operation::Meld { heap1, heap2, heap_out } => {
                self.heap(heap1)?;
                self.heap(heap2)?;
                if heap1 == heap2 {
                    return Err(ReplayError::MeldAliasing(heap1));
                }
                self.fresh_heap(heap_out)?;
                if heap_out == heap1 || heap_out == heap2 {
                    return Err(ReplayError::DuplicateHeapId(heap_out));
                }
                let mut merged = self.heaps.remove(&heap1).expect("checked");
                merged.extend(self.heaps.remove(&heap2).expect("checked"));
                for (p, _) in &merged {
                    self.node_heap.insert(*p, heap_out);
                }
                self.heaps.insert(heap_out, merged);
                self.retired.insert(heap1);
                self.retired.insert(heap2);
                Ok(StepOutcome::Heap(heap_out))
            }
            Operation::FindMin { heap } => {
                let (key, group) = self.min_group(heap)?;
                Ok(StepOutcome::Min(*group.iter().min().expect("nonempty"), key))
            }
            Operation::ExtractMin { heap } => {
                let (key, group) = self.min_group(heap)?;
                let p = *group.iter().min().expect("nonempty");
                self.remove(heap, p)?;
                Ok(StepOutcome::Min(p, key))
            }
            Operation::DecreaseKey { heap, node, delta } => {
                let i = self.member(heap, node)?;
                let items = self.heaps.get_mut(&heap).expect("checked");
                items[i].1 = items[i].1.decreased_by(delta)?;
                Ok(StepOutcome::Unit)
            }
            Operation::Delete { heap, node } => {
                self.remove(heap, node)?;
                Ok(StepOutcome::Unit)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffReport {
    Equivalent,
    Divergence {
        /// 1-based position in the trace.
        op_index: usize,
        kind: OpKind,
        core: Result<StepOutcome, ReplayError>,
        oracle: Result<StepOutcome, ReplayError>,
    },
}

impl DiffReport {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, DiffReport::Equivalent)
    }
}

/// Co-replays `trace` on the pairing heap and on the oracle and reports the
/// first operation whose result differs.
///
/// When several nodes share the minimum key, the pairing heap's choice is
/// accepted as long as it is one of them; the oracle then removes that same
/// node so both sides stay in step.
pub fn diff_run(trace: &Trace) -> DiffReport {
    diff_run_on(trace, Replayer::new())
}

pub(crate) fn diff_run_on(trace: &Trace, mut core: Replayer) -> DiffReport {
    let mut oracle = OracleForest::new();
    for (i, op) in trace.ops.iter().enumerate() {
        let core_res = core.step(op);
        let oracle_res = match (*op, &core_res) {
            (Operation::FindMin { heap } | Operation::ExtractMin { heap }, Ok(StepOutcome::Min(p, k))) => {
                match oracle.min_group(heap) {
                    Ok((key, group)) if key == *k && group.contains(p) => {
                        if op.kind() == OpKind::ExtractMin {
                            oracle.remove(heap, *p).expect("member of the min group");
                        }
                        Ok(StepOutcome::Min(*p, key))
                    }
                    Ok((key, group)) => Ok(StepOutcome::Min(group[0], key)),
                    Err(e) => Err(e),
                }
            }
            _ => oracle.apply(op),
        };
        if core_res != oracle_res {
            return DiffReport::Divergence { op_index: i + 1, kind: op.kind(), core: core_res, oracle: oracle_res };
        }
    }
    DiffReport::Equivalent
}
