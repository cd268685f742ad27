use super::*;
use crate::gen::{generate_random_trace, GeneratorConfig, KeyDistribution, OpMix};
use crate::trace::parse_trace;

fn trace(lines: &[&str]) -> Trace {
    parse_trace(&lines.join("\n")).unwrap()
}

fn make(h: u64) -> String {
    format!(r#"{{"op":"make_heap","heap_out":{h}}}"#)
}

fn insert(h: u64, key: f64, p: u64) -> String {
    format!(r#"{{"op":"insert","heap":{h},"key":{key},"node_out":{p}}}"#)
}

fn extract(h: u64) -> String {
    format!(r#"{{"op":"extract_min","heap":{h}}}"#)
}

fn meld(a: u64, b: u64, out: u64) -> String {
    format!(r#"{{"op":"meld","heap1":{a},"heap2":{b},"heap_out":{out}}}"#)
}

fn owned(lines: &[String]) -> Trace {
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    trace(&refs)
}

fn full_checks() -> AuditOptions {
    AuditOptions { cross_check_every: Some(1), check_invariants: true, record_pairings: true, ..Default::default() }
}

#[test]
fn colors_follow_removal() {
    let c = color_nodes(&owned(&[make(1), insert(1, 5.0, 1)])).unwrap();
    assert_eq!(c.get(NodeHandle(1)), Some(Color::Black));
    let c = color_nodes(&owned(&[make(1), insert(1, 5.0, 1), extract(1)])).unwrap();
    assert_eq!(c.get(NodeHandle(1)), Some(Color::White));
}

#[test]
fn zero_survivors_means_all_white() {
    let cfg = GeneratorConfig { op_count: 10_000, survivor_fraction: 0.0, seed: 3, ..Default::default() };
    let t = generate_random_trace(&cfg).unwrap();
    let c = color_nodes(&t).unwrap();
    assert!(!c.is_empty());
    assert_eq!(c.white_count(), c.len());
}

#[test]
fn make_heap_then_insert_white_is_tight() {
    let r = audit_trace(&owned(&[make(1), insert(1, 5.0, 1), extract(1)])).unwrap();
    assert_eq!(r.ops[0].delta_phi, 8.0);
    assert_eq!(r.ops[1].delta_phi, 12.0);
    assert_eq!(r.make_inserts.len(), 1);
    let m = r.make_inserts[0];
    assert_eq!(m.a as f64 + m.delta_phi, 21.0);
    assert_eq!(m.slack, 0.0);
    assert!(r.passed(), "{:?}", r.failures());
}

#[test]
fn make_heap_then_insert_black() {
    let r = audit_trace(&owned(&[make(1), insert(1, 5.0, 1)])).unwrap();
    assert_eq!(r.phim(), 14.0);
    assert_eq!(r.make_inserts[0].delta_phi, 14.0);
}

#[test]
fn meld_of_white_singletons() {
    let t = owned(&[make(1), make(2), insert(1, 1.0, 1), insert(2, 2.0, 2), meld(1, 2, 3), extract(3), extract(3)]);
    let r = audit_trace_with(&t, &full_checks()).unwrap();
    assert_eq!(r.phi[4], 40.0);
    let m = r.ops[4];
    assert_eq!(m.kind, OpKind::Meld);
    assert_eq!(m.a, 2);
    assert_eq!(m.delta_phi, -26.0);
    assert_eq!(m.a as f64 + m.delta_phi, -24.0);
    assert_eq!(m.slack, 24.0);
    assert!(r.passed(), "{:?}", r.failures());
}

#[test]
fn phi_starts_at_zero() {
    let r = audit_trace(&Trace::default()).unwrap();
    assert_eq!(r.phi0(), 0.0);
    assert_eq!(r.phim(), 0.0);
    assert!(r.passed());
}

#[test]
fn white_white_pairing_with_four_below() {
    // Root 0 with children 1(5) 2 3; every node is eventually extracted.
    let t = owned(&[
        make(1),
        insert(1, 0.0, 1),
        insert(1, 3.0, 2),
        insert(1, 2.0, 3),
        make(2),
        insert(2, 1.0, 4),
        insert(2, 5.0, 5),
        meld(1, 2, 3),
        extract(3),
        extract(3),
        extract(3),
        extract(3),
        extract(3),
    ]);
    let r = audit_trace_with(&t, &full_checks()).unwrap();
    let first = &r.extracts[0].checks[0];
    assert_eq!((first.a, first.b, first.c), (NodeHandle(4), NodeHandle(3), Some(NodeHandle(2))));
    assert_eq!((first.s_a, first.s_c), (4, 1));
    assert_eq!(first.bound_i, Some(36.0));
    assert!(first.gain <= 36.0);
    assert!(r.passed(), "{:?}", r.failures());
}

#[test]
fn worked_example_trace_has_nonnegative_slack() {
    let mut lines = vec![make(1)];
    for (i, k) in [1.0, 6.0, 8.0, 9.0, 5.0, 2.0, 7.0, 3.0, 4.0].iter().enumerate() {
        lines.push(insert(1, *k, i as u64 + 1));
    }
    lines.push(extract(1));
    let r = audit_trace_with(&owned(&lines), &full_checks()).unwrap();
    assert!(r.ops.iter().all(|o| o.slack >= 0.0));
    assert_eq!(r.extracts[0].c, 8);
    assert_eq!(r.extracts[0].pairings, 7);
    assert!(r.passed(), "{:?}", r.failures());
}

#[test]
fn audits_are_deterministic() {
    let cfg = GeneratorConfig { op_count: 2000, seed: 9, ..Default::default() };
    let t = generate_random_trace(&cfg).unwrap();
    let opts = AuditOptions { record_pairings: true, ..Default::default() };
    assert_eq!(audit_trace_with(&t, &opts).unwrap(), audit_trace_with(&t, &opts).unwrap());
}

#[test]
fn random_traces_pass_with_full_checks() {
    let heavy_updates: OpMix = "make_heap=1,insert=8,meld=2,find_min=1,extract_min=3,decrease_key=6,delete=3".parse().unwrap();
    for seed in 0..12 {
        for (f, mix) in [(0.0, OpMix::default()), (0.3, heavy_updates), (0.7, OpMix::default())] {
            let keys = if seed % 2 == 0 { KeyDistribution::Permutation } else { KeyDistribution::Uniform { lo: 0.0, hi: 50.0 } };
            let cfg = GeneratorConfig { op_count: 600, mix, keys, survivor_fraction: f, seed };
            let t = generate_random_trace(&cfg).unwrap();
            let r = audit_trace_with(&t, &full_checks()).unwrap();
            assert!(r.passed(), "seed {seed}, f {f}: {:?}", &r.failures()[..r.failures().len().min(5)]);
        }
    }
}

#[test]
fn find_min_changes_nothing() {
    let t = owned(&[make(1), insert(1, 2.0, 1), insert(1, 1.0, 2), r#"{"op":"find_min","heap":1}"#.to_string()]);
    let r = audit_trace(&t).unwrap();
    assert_eq!(r.ops[3].delta_phi, 0.0);
    assert_eq!(r.ops[3].a, 1);
    assert!(r.ops[3].ok);
}

#[test]
fn replay_errors_carry_the_op_index() {
    let err = audit_trace(&owned(&[make(1), extract(1)])).unwrap_err();
    assert_eq!(err.op_index, 2);
    assert_eq!(err.error, ReplayError::EmptyHeap(HeapId(1)));
}

#[test]
fn bounds() {
    assert_eq!(amortized_bound(OpKind::Insert, 10), 21.0);
    assert_eq!(amortized_bound(OpKind::Meld, 10), 0.0);
    assert_eq!(amortized_bound(OpKind::DecreaseKey, 4), 26.0 + 48.0);
    assert_eq!(amortized_bound(OpKind::ExtractMin, 0), 17.0);
    assert_eq!(amortized_bound(OpKind::ExtractMin, 3), 102.0 * 2.0 + 17.0);
    assert_eq!(amortized_bound(OpKind::Delete, 2), 43.0 + 126.0 * 2.0);
    assert_eq!(extract_rank_bound(4, 1), 108.0 - 36.0);
}
