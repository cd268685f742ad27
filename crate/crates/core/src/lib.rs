//! Pairing heaps with exact two-pass semantics, plus tooling to replay
//! operation traces, diff them against a brute-force model, and audit the
//! amortized cost of every operation against a potential function.

pub mod audit;
pub mod gen;
pub mod heap;
pub mod key;
pub mod oracle;
pub mod trace;

pub use heap::{
    Command, CostRecord, Cut, Forest, ForestObserver, HeapError, HeapId, NoObserver, NodeHandle, NodeView, OpKind,
    OpRecord, Outcome, PairingEvent, Pass, TreeShape,
};
pub use key::{Delta, Key, KeyError};
