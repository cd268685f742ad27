use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pheap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pheap")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn worked_example_trace() -> String {
    let mut s = String::from("{\"op\":\"make_heap\",\"heap_out\":1}\n");
    for (i, k) in [1, 6, 8, 9, 5, 2, 7, 3, 4].iter().enumerate() {
        s += &format!("{{\"op\":\"insert\",\"heap\":1,\"key\":{k},\"node_out\":{}}}\n", i + 1);
    }
    s += "{\"op\":\"extract_min\",\"heap\":1}\n";
    s
}

fn generated(dir: &TempDir, ops: &str, seed: &str) -> PathBuf {
    let p = dir.path().join(format!("gen-{ops}-{seed}.trace"));
    let out = pheap(&["gen", "--ops", ops, "--seed", seed, "--out", path_str(&p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn gen_zero_ops_is_a_valid_empty_trace() {
    let dir = TempDir::new().unwrap();
    let p = generated(&dir, "0", "1");
    assert_eq!(fs::read_to_string(&p).unwrap(), "");
    let out = pheap(&["validate", path_str(&p)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("ok: 0 operations"));
}

#[test]
fn gen_is_deterministic_and_writes_stdout() {
    let a = pheap(&["gen", "--ops", "300", "--seed", "5", "--keys", "perm"]);
    let b = pheap(&["gen", "--ops", "300", "--seed", "5", "--keys", "perm"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 300);
}

#[test]
fn generated_trace_validates_diffs_and_audits() {
    let dir = TempDir::new().unwrap();
    let p = generated(&dir, "2000", "7");
    assert_eq!(code(&pheap(&["validate", path_str(&p)])), 0);
    let diff = pheap(&["diff", path_str(&p)]);
    assert_eq!(code(&diff), 0);
    assert!(stdout(&diff).starts_with("equivalent"));
    let audit = pheap(&["audit", path_str(&p), "--cross-check", "100"]);
    assert_eq!(code(&audit), 0, "{}", stdout(&audit));
    assert!(stdout(&audit).contains("verdict: pass"));
}

#[test]
fn audit_worked_example_writes_reports() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "example.trace", &worked_example_trace());
    let jsonl = dir.path().join("example.jsonl");
    let csv = dir.path().join("example.csv");
    let out = pheap(&["audit", path_str(&trace), "--report", path_str(&jsonl), "--csv", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    let lines: Vec<serde_json::Value> =
        fs::read_to_string(&jsonl).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 12);
    for rec in &lines[..11] {
        assert!(rec["slack"].as_f64().unwrap() >= 0.0, "{rec}");
    }
    assert_eq!(lines[10]["kind"], "extract_min");
    assert_eq!(lines[10]["a"], 8);
    assert_eq!(lines[11]["verdict"], "pass");

    let csv_text = fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("op_index,kind,a,n,delta_phi,bound,slack\n"));
    assert_eq!(csv_text.lines().count(), 12);

    // Same input, same bytes.
    let csv2 = dir.path().join("again.csv");
    pheap(&["audit", path_str(&trace), "--csv", path_str(&csv2)]);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&csv2).unwrap());
}

#[test]
fn run_writes_events() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "example.trace", &worked_example_trace());
    let events = dir.path().join("events.jsonl");
    let out = pheap(&["run", path_str(&trace), "--events-out", path_str(&events)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("total actual cost: 26"));
    let last: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&events).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(last["kind"], "extract_min");
    assert_eq!(last["pairings"], 7);
    assert_eq!(last["events"][0]["pass"], "first");
    assert_eq!(last["events"][0]["left"], 9);
}

#[test]
fn invalid_trace_fails_checks() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.trace", "{\"op\":\"make_heap\",\"heap_out\":1}\n{\"op\":\"extract_min\",\"heap\":1}\n");
    let out = pheap(&["validate", path_str(&p)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("op 2"));
    assert_eq!(code(&pheap(&["run", path_str(&p)])), 1);
    assert_eq!(code(&pheap(&["audit", path_str(&p)])), 1);
}

#[test]
fn file_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.trace");
    assert_eq!(code(&pheap(&["validate", path_str(&missing)])), 3);
    assert_eq!(code(&pheap(&["audit", path_str(&missing)])), 3);
    let garbage = write(&dir, "garbage.trace", "{\"op\":\"insert\"}\n");
    let out = pheap(&["diff", path_str(&garbage)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&pheap(&["frobnicate"])), 2);
    assert_eq!(code(&pheap(&["gen", "--ops", "many"])), 2);
    assert_eq!(code(&pheap(&["gen", "--mix", "insert=-1"])), 2);
    assert_eq!(code(&pheap(&["gen", "--survivors", "1.5"])), 2);
    assert_eq!(code(&pheap(&["audit", "x.trace", "--tolerance", "-1"])), 2);
}

#[test]
fn bench_csv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &PathBuf| vec!["bench", "--sizes", "200,800", "--seeds", "2", "--audit", "--csv"]
        .into_iter()
        .map(String::from)
        .chain([path_str(p).to_string()])
        .collect::<Vec<_>>();
    for p in [&a, &b] {
        let argv = args(p);
        let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
        let out = pheap(&refs);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains("trace length 800 x 2 seeds"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("ops,bucket,kind,count,total_cost,mean_cost,pairings,mean_slack\n"));
}
