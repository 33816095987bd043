use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperprove"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_checkpoint(dir: &Path) {
    ok(dir, &["gen-corpus", "--seed", "4", "--counts", "10,10,5", "--out", "corpus.jsonl"]);
    ok(dir, &["train", "--corpus", "corpus.jsonl", "--seed", "4", "--rl-epochs", "1", "--out", "ck.json"]);
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_counts_give_an_empty_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-corpus", "--counts", "0,0,0", "--out", "empty.jsonl"]);
    assert_eq!(std::fs::read(tmp.path().join("empty.jsonl")).unwrap(), b"");
}

#[test]
fn corpus_generation_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-corpus", "--seed", "9", "--out", "a.jsonl"]);
    ok(tmp.path(), &["gen-corpus", "--seed", "9", "--out", "b.jsonl"]);
    let a = std::fs::read(tmp.path().join("a.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(tmp.path().join("b.jsonl")).unwrap());
}

#[test]
fn unwritable_output_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["gen-corpus", "--out", "missing/dir/c.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_gamma_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-corpus", "--counts", "3,3,1", "--out", "c.jsonl"]);
    let out = run(tmp.path(), &["train", "--corpus", "c.jsonl", "--gamma", "1.5", "--out", "ck.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    assert!(!tmp.path().join("ck.json").exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn oracle_finds_the_seven_step_proof() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(tmp.path(), &["oracle", "--theorem", "forall n, |- Plus(Var(n),Zero) = Var(n)"]);
    let record: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(record["shortest_length"], 7);
}

#[test]
fn train_prove_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_checkpoint(d);
    let first = std::fs::read(d.join("ck.json")).unwrap();
    ok(d, &["train", "--corpus", "corpus.jsonl", "--seed", "4", "--rl-epochs", "1", "--out", "ck2.json"]);
    assert_eq!(first, std::fs::read(d.join("ck2.json")).unwrap());
    assert!(d.join("ck.json.report.json").is_file());

    let stdout = ok(d, &["prove", "--checkpoint", "ck.json", "--theorem", "|- Plus(Succ(Zero),Zero) = Succ(Zero)", "--strategy", "greedy"]);
    let record: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(record["status"], "proved");
    assert!(stdout.contains("proof: "));

    let stdout = ok(d, &["prove", "--checkpoint", "ck.json", "--theorem", "|- Zero = Zero", "--budget", "0"]);
    assert!(stdout.contains("budget_exceeded"));

    let out = run(d, &["prove", "--checkpoint", "ck.json", "--theorem", "|- Zero = "]);
    assert_eq!(out.status.code(), Some(2));

    ok(d, &["eval", "--checkpoint", "ck.json", "--corpus", "corpus.jsonl", "--strategies", "astar,dfs", "--out", "ev"]);
    let summary = json(&d.join("ev/summary.json"));
    let pair = &summary["matched"][0];
    for k in ["shorter", "equal", "longer"] {
        assert!(pair[k].is_u64(), "missing {k}");
    }
    let rows = std::fs::read_to_string(d.join("ev/rows.csv")).unwrap();
    let test_size = summary["aggregates"][0]["theorems"].as_u64().unwrap() as usize;
    assert_eq!(rows.lines().count(), 1 + 2 * test_size);
    let mut reader = csv::Reader::from_reader(rows.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    for agg in summary["aggregates"].as_array().unwrap() {
        let strategy = agg["strategy"].as_str().unwrap();
        let proved = records
            .iter()
            .filter(|r| &r[col("strategy")] == strategy && &r[col("status")] == "proved")
            .count();
        assert_eq!(agg["proved"].as_u64().unwrap() as usize, proved, "{strategy}");
    }

    ok(d, &["eval", "--checkpoint", "ck.json", "--corpus", "corpus.jsonl", "--test-ratio", "0", "--strategies", "astar", "--out", "empty"]);
    let rows = std::fs::read_to_string(d.join("empty/rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1);
    assert_eq!(json(&d.join("empty/summary.json"))["rows"].as_array().unwrap().len(), 0);
}
