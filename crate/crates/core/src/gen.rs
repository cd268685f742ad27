//! Seeded random trace generation.
//!
//! The generator drives a real [`Forest`] while it writes the trace, so it
//! only ever emits operations that are applicable at that point. Weights of
//! inapplicable kinds are dropped and the rest renormalized.
//!
//! Every inserted node is labeled up front as a survivor (probability
//! `survivor_fraction`) or as doomed. Doomed nodes are the only ones that
//! `extract_min` (when the heap's root is doomed) and `delete` may remove,
//! and the last operations of the trace are reserved for removing whatever
//! doomed nodes remain. Survivors therefore end up exactly the nodes still
//! in the forest when the trace ends.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::heap::{Forest, HeapId, NodeHandle, OpKind};
use crate::key::{Delta, Key};
use crate::trace::{Operation, Trace};

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then the output is `state`
/// mixed by `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
/// z *= 0x94D049BB133111EB; z ^= z >> 31` (all arithmetic mod 2^64).
///
/// * `next_f64` = `(next_u64 >> 11) * 2^-53`, uniform in `[0, 1)`.
/// * `below(n)` = high 64 bits of `next_u64 * n` (128-bit product).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

/// Relative weights of the seven operation kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpMix {
    weights: [f64; 7],
}

impl OpMix {
    pub fn new() -> Self {
        OpMix { weights: [0.0; 7] }
    }

    pub fn with(mut self, kind: OpKind, weight: f64) -> Self {
        self.weights[kind as usize] = weight;
        self
    }

    pub fn weight(&self, kind: OpKind) -> f64 {
        self.weights[kind as usize]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl Default for OpMix {
    /// Insert-heavy mix with every kind present.
    fn default() -> Self {
        OpMix::new()
            .with(OpKind::MakeHeap, 0.5)
            .with(OpKind::Insert, 8.0)
            .with(OpKind::Meld, 1.0)
            .with(OpKind::FindMin, 1.0)
            .with(OpKind::ExtractMin, 4.0)
            .with(OpKind::DecreaseKey, 3.0)
            .with(OpKind::Delete, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixParseError {
    #[error("expected kind=weight, got {0:?}")]
    Malformed(String),
    #[error("unknown operation kind {0:?}")]
    UnknownKind(String),
    #[error("weight for {0} must be a nonnegative finite number")]
    BadWeight(String),
}

/// `kind=weight` pairs separated by commas, e.g.
/// `insert=8,extract_min=4,decrease_key=3`. Unlisted kinds get weight 0.
impl FromStr for OpMix {
    type Err = MixParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut mix = OpMix::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, weight) = part.split_once('=').ok_or_else(|| MixParseError::Malformed(part.to_string()))?;
            let kind = OpKind::from_name(name.trim()).ok_or_else(|| MixParseError::UnknownKind(name.to_string()))?;
            let w: f64 = weight.trim().parse().map_err(|_| MixParseError::BadWeight(name.to_string()))?;
            if !w.is_finite() || w < 0.0 {
                return Err(MixParseError::BadWeight(name.to_string()));
            }
            mix.weights[kind as usize] = w;
        }
        Ok(mix)
    }
}

impl fmt::Display for OpMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = OpKind::ALL
            .iter()
            .filter(|k| self.weight(**k) > 0.0)
            .map(|k| format!("{}={}", k, self.weight(*k)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyDistribution {
    /// Uniform real keys in `[lo, hi)`; decrease-key deltas uniform in `[0, hi - lo)`.
    Uniform { lo: f64, hi: f64 },
    /// The i-th insert gets the i-th entry of a shuffled `0..op_count`;
    /// deltas are integers in `0..=op_count/4`.
    Permutation,
}

impl FromStr for KeyDistribution {
    type Err = String;

    /// `perm` or `uniform:LO:HI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "perm" || s == "permutation" {
            return Ok(KeyDistribution::Permutation);
        }
        let bad = || format!("expected perm or uniform:LO:HI, got {s:?}");
        let rest = s.strip_prefix("uniform:").ok_or_else(bad)?;
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        Ok(KeyDistribution::Uniform { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub op_count: usize,
    pub mix: OpMix,
    pub keys: KeyDistribution,
    /// Fraction of inserted nodes meant to remain in the forest at the end.
    pub survivor_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            op_count: 1000,
            mix: OpMix::default(),
            keys: KeyDistribution::Uniform { lo: 0.0, hi: 1_000_000.0 },
            survivor_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("operation weights must not all be zero")]
    ZeroWeights,
    #[error("survivor fraction must be in [0, 1], got {0}")]
    BadSurvivorFraction(f64),
    #[error("key range must be finite with lo < hi")]
    BadKeyRange,
    #[error("nodes must be removable: survivor fraction < 1 needs extract_min or delete weight")]
    NoRemovals,
    #[error("no applicable operation at step {0}")]
    Infeasible(usize),
}

/// Swap-remove set of handles with O(1) membership updates.
#[derive(Default)]
struct HandleSet {
    items: Vec<NodeHandle>,
    pos: Vec<usize>,
}

impl HandleSet {
    fn insert(&mut self, p: NodeHandle) {
        let i = p.0 as usize;
        if self.pos.len() <= i {
            self.pos.resize(i + 1, usize::MAX);
        }
        self.pos[i] = self.items.len();
        self.items.push(p);
    }

    fn remove(&mut self, p: NodeHandle) {
        let Some(&i) = self.pos.get(p.0 as usize) else { return };
        if i == usize::MAX {
            return;
        }
        self.items.swap_remove(i);
        if let Some(moved) = self.items.get(i) {
            self.pos[moved.0 as usize] = i;
        }
        self.pos[p.0 as usize] = usize::MAX;
    }

    fn contains(&self, p: NodeHandle) -> bool {
        self.pos.get(p.0 as usize).is_some_and(|&i| i != usize::MAX)
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn pick(&self, rng: &mut SplitMix64) -> Option<NodeHandle> {
        (!self.items.is_empty()).then(|| self.items[rng.below(self.items.len() as u64) as usize])
    }
}

struct GenState {
    forest: Forest,
    rng: SplitMix64,
    heaps: Vec<HeapId>,
    live: HandleSet,
    doomed: HandleSet,
    perm: Vec<u64>,
    inserted: usize,
}

impl GenState {
    fn key(&mut self, keys: KeyDistribution) -> Key {
        let v = match keys {
            KeyDistribution::Uniform { lo, hi } => lo + self.rng.next_f64() * (hi - lo),
            KeyDistribution::Permutation => self.perm[self.inserted] as f64,
        };
        Key::new(v).expect("finite by construction")
    }

    fn delta(&mut self, cfg: &GeneratorConfig) -> Delta {
        let v = match cfg.keys {
            KeyDistribution::Uniform { lo, hi } => self.rng.next_f64() * (hi - lo),
            KeyDistribution::Permutation => self.rng.below(cfg.op_count as u64 / 4 + 1) as f64,
        };
        Delta::new(v).expect("nonnegative by construction")
    }

    fn nonempty_heaps(&self) -> Vec<HeapId> {
        self.heaps.iter().copied().filter(|h| self.forest.root_of(*h).is_some()).collect()
    }

    fn doomed_root_heaps(&self) -> Vec<HeapId> {
        self.heaps
            .iter()
            .copied()
            .filter(|h| self.forest.root_of(*h).is_some_and(|r| self.doomed.contains(r)))
            .collect()
    }

    fn pick_heap(&mut self, from: &[HeapId]) -> HeapId {
        from[self.rng.below(from.len() as u64) as usize]
    }

    fn remove_node(&mut self, p: NodeHandle) {
        self.live.remove(p);
        self.doomed.remove(p);
    }
}

/// Generates a valid trace. Deterministic in the config (including seed).
pub fn generate_random_trace(cfg: &GeneratorConfig) -> Result<Trace, GenError> {
    if cfg.mix.total() <= 0.0 {
        return Err(GenError::ZeroWeights);
    }
    if !(0.0..=1.0).contains(&cfg.survivor_fraction) {
        return Err(GenError::BadSurvivorFraction(cfg.survivor_fraction));
    }
    if let KeyDistribution::Uniform { lo, hi } = cfg.keys {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && (hi - lo).is_finite()) {
            return Err(GenError::BadKeyRange);
        }
    }
    let removals = cfg.mix.weight(OpKind::ExtractMin) + cfg.mix.weight(OpKind::Delete);
    if cfg.survivor_fraction < 1.0 && cfg.mix.weight(OpKind::Insert) > 0.0 && removals <= 0.0 {
        return Err(GenError::NoRemovals);
    }

    let mut st = GenState {
        forest: Forest::new().without_event_log(),
        rng: SplitMix64::new(cfg.seed),
        heaps: Vec::new(),
        live: HandleSet::default(),
        doomed: HandleSet::default(),
        perm: Vec::new(),
        inserted: 0,
    };
    if cfg.keys == KeyDistribution::Permutation {
        st.perm = (0..cfg.op_count as u64).collect();
        for i in (1..st.perm.len()).rev() {
            let j = st.rng.below(i as u64 + 1) as usize;
            st.perm.swap(i, j);
        }
    }

    let mut ops = Vec::with_capacity(cfg.op_count);
    for step in 0..cfg.op_count {
        // Operations left including this one.
        let remaining = cfg.op_count - step;
        let forced = st.doomed.len() > 0 && st.doomed.len() >= remaining;
        let kind = if forced {
            let extract_ok =
                cfg.mix.weight(OpKind::ExtractMin) > 0.0 && !st.doomed_root_heaps().is_empty();
            let w_extract = if extract_ok { cfg.mix.weight(OpKind::ExtractMin) } else { 0.0 };
            let w_delete = cfg.mix.weight(OpKind::Delete);
            if w_extract > 0.0 && st.rng.next_f64() * (w_extract + w_delete) < w_extract {
                OpKind::ExtractMin
            } else {
                // Falls back to delete even at weight 0.
                OpKind::Delete
            }
        } else {
            let doomed_insert_ok = st.doomed.len() + 1 < remaining;
            let applicable = |k: OpKind| match k {
                OpKind::MakeHeap => true,
                OpKind::Insert => !st.heaps.is_empty() && (cfg.survivor_fraction > 0.0 || doomed_insert_ok),
                OpKind::Meld => st.heaps.len() >= 2,
                OpKind::FindMin => !st.nonempty_heaps().is_empty(),
                OpKind::ExtractMin => !st.doomed_root_heaps().is_empty(),
                OpKind::DecreaseKey => st.live.len() > 0,
                OpKind::Delete => st.doomed.len() > 0,
            };
            let weights: Vec<(OpKind, f64)> = OpKind::ALL
                .iter()
                .map(|&k| (k, cfg.mix.weight(k)))
                .filter(|&(k, w)| w > 0.0 && applicable(k))
                .collect();
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            if total <= 0.0 {
                return Err(GenError::Infeasible(step));
            }
            let mut target = st.rng.next_f64() * total;
            let mut chosen = weights[weights.len() - 1].0;
            for (k, w) in &weights {
                if target < *w {
                    chosen = *k;
                    break;
                }
                target -= w;
            }
            chosen
        };
        ops.push(emit(&mut st, cfg, kind, remaining));
    }
    Ok(Trace::new(ops))
}

fn emit(st: &mut GenState, cfg: &GeneratorConfig, kind: OpKind, remaining: usize) -> Operation {
    match kind {
        OpKind::MakeHeap => {
            let h = st.forest.make_heap();
            st.heaps.push(h);
            Operation::MakeHeap { heap_out: h }
        }
        OpKind::Insert => {
            let heaps = st.heaps.clone();
            let h = st.pick_heap(&heaps);
            let key = st.key(cfg.keys);
            let doomed_ok = st.doomed.len() + 1 < remaining;
            let survivor = !doomed_ok || st.rng.next_f64() < cfg.survivor_fraction;
            let p = st.forest.insert(h, key).expect("live heap");
            st.inserted += 1;
            st.live.insert(p);
            if !survivor {
                st.doomed.insert(p);
            }
            Operation::Insert { heap: h, key, node_out: p }
        }
        OpKind::Meld => {
            let n = st.heaps.len() as u64;
            let i = st.rng.below(n) as usize;
            let mut j = st.rng.below(n - 1) as usize;
            if j >= i {
                j += 1;
            }
            let (h1, h2) = (st.heaps[i], st.heaps[j]);
            let h = st.forest.meld(h1, h2).expect("distinct live heaps");
            st.heaps.retain(|x| *x != h1 && *x != h2);
            st.heaps.push(h);
            Operation::Meld { heap1: h1, heap2: h2, heap_out: h }
        }
        OpKind::FindMin => {
            let heaps = st.nonempty_heaps();
            let h = st.pick_heap(&heaps);
            st.forest.find_min(h).expect("nonempty");
            Operation::FindMin { heap: h }
        }
        OpKind::ExtractMin => {
            let heaps = st.doomed_root_heaps();
            let h = st.pick_heap(&heaps);
            let (p, _) = st.forest.extract_min(h).expect("nonempty");
            st.remove_node(p);
            Operation::ExtractMin { heap: h }
        }
        OpKind::DecreaseKey => {
            let p = st.live.pick(&mut st.rng).expect("live node");
            let h = st.forest.heap_of(p).expect("live node has a heap");
            let delta = st.delta(cfg);
            st.forest.decrease_key(h, p, delta.value()).expect("valid decrease");
            Operation::DecreaseKey { heap: h, node: p, delta }
        }
        OpKind::Delete => {
            let p = st.doomed.pick(&mut st.rng).expect("doomed node");
            let h = st.forest.heap_of(p).expect("live node has a heap");
            st.forest.delete(h, p).expect("valid delete");
            st.remove_node(p);
            Operation::Delete { heap: h, node: p }
        }
    }
}

/// `n` inserts into one heap followed by `n` extract-mins, with keys
/// drawn from a seeded permutation of `0..n`.
pub fn insert_then_drain(n: usize, seed: u64) -> Trace {
    let mut rng = SplitMix64::new(seed);
    let mut keys: Vec<u64> = (0..n as u64).collect();
    for i in (1..keys.len()).rev() {
        keys.swap(i, rng.below(i as u64 + 1) as usize);
    }
    let h = HeapId(1);
    let mut ops = Vec::with_capacity(2 * n + 1);
    ops.push(Operation::MakeHeap { heap_out: h });
    for (i, k) in keys.into_iter().enumerate() {
        ops.push(Operation::Insert { heap: h, key: Key::new(k as f64).unwrap(), node_out: NodeHandle(i as u64 + 1) });
    }
    ops.extend(std::iter::repeat_n(Operation::ExtractMin { heap: h }, n));
    Trace::new(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{trace_stats, validate_trace};

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0, as published with the algorithm.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = SplitMix64::new(7);
        for n in [1u64, 2, 3, 10, 1 << 40] {
            for _ in 0..1000 {
                assert!(r.below(n) < n);
            }
        }
    }

    #[test]
    fn mix_parses() {
        let m: OpMix = "insert=8, extract_min=4,meld=0.5".parse().unwrap();
        assert_eq!(m.weight(OpKind::Insert), 8.0);
        assert_eq!(m.weight(OpKind::Meld), 0.5);
        assert_eq!(m.weight(OpKind::Delete), 0.0);
        assert_eq!(m.to_string().parse::<OpMix>().unwrap(), m);
        assert!("insert".parse::<OpMix>().is_err());
        assert!("push=1".parse::<OpMix>().is_err());
        assert!("insert=-1".parse::<OpMix>().is_err());
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = GeneratorConfig { op_count: 500, seed: 42, ..Default::default() };
        assert_eq!(generate_random_trace(&cfg).unwrap(), generate_random_trace(&cfg).unwrap());
        let other = GeneratorConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate_random_trace(&cfg).unwrap(), generate_random_trace(&other).unwrap());
    }

    #[test]
    fn generated_traces_validate() {
        for seed in 0..50 {
            for keys in [KeyDistribution::Permutation, KeyDistribution::Uniform { lo: -5.0, hi: 5.0 }] {
                let cfg = GeneratorConfig { op_count: 400, seed, keys, ..Default::default() };
                let t = generate_random_trace(&cfg).unwrap();
                assert_eq!(t.len(), 400);
                assert!(validate_trace(&t).is_ok(), "seed {seed}");
            }
        }
    }

    #[test]
    fn survivor_fraction_zero_removes_everything() {
        let cfg = GeneratorConfig { op_count: 10_000, survivor_fraction: 0.0, seed: 3, ..Default::default() };
        let s = trace_stats(&generate_random_trace(&cfg).unwrap());
        assert!(s.inserted > 0);
        assert_eq!(s.survivors(), 0);
    }

    #[test]
    fn survivor_fraction_one_never_removes() {
        let cfg = GeneratorConfig { op_count: 2000, survivor_fraction: 1.0, seed: 3, ..Default::default() };
        let t = generate_random_trace(&cfg).unwrap();
        assert!(!t.ops.iter().any(|o| matches!(o.kind(), OpKind::ExtractMin | OpKind::Delete)));
    }

    #[test]
    fn survivor_fraction_is_realized() {
        for f in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for seed in 0..5 {
                let cfg = GeneratorConfig { op_count: 1000, survivor_fraction: f, seed, ..Default::default() };
                let s = trace_stats(&generate_random_trace(&cfg).unwrap());
                assert!((s.survivor_fraction() - f).abs() <= 0.1, "f={f} seed={seed}: {}", s.survivor_fraction());
            }
        }
    }

    #[test]
    fn config_errors() {
        let only_extract = GeneratorConfig { mix: OpMix::new().with(OpKind::ExtractMin, 1.0), ..Default::default() };
        assert_eq!(generate_random_trace(&only_extract), Err(GenError::Infeasible(0)));
        let zero = GeneratorConfig { mix: OpMix::new(), ..Default::default() };
        assert_eq!(generate_random_trace(&zero), Err(GenError::ZeroWeights));
        let no_removal = GeneratorConfig {
            mix: OpMix::new().with(OpKind::MakeHeap, 1.0).with(OpKind::Insert, 1.0),
            ..Default::default()
        };
        assert_eq!(generate_random_trace(&no_removal), Err(GenError::NoRemovals));
        let bad = GeneratorConfig { survivor_fraction: 1.5, ..Default::default() };
        assert!(generate_random_trace(&bad).is_err());
    }

    #[test]
    fn zero_ops_is_empty() {
        let cfg = GeneratorConfig { op_count: 0, ..Default::default() };
        assert!(generate_random_trace(&cfg).unwrap().is_empty());
    }

    #[test]
    fn drain_trace_shape() {
        let t = insert_then_drain(16, 1);
        assert_eq!(t.len(), 33);
        assert!(validate_trace(&t).is_ok());
        let mut r = crate::trace::Replayer::new();
        let mut out = Vec::new();
        for op in &t.ops {
            if let crate::trace::StepOutcome::Min(_, k) = r.step(op).unwrap() {
                out.push(k.value());
            }
        }
        assert_eq!(out, (0..16).map(|v| v as f64).collect::<Vec<_>>());
    }
}
