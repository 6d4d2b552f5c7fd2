//! Command-line behavior: exit codes, file outputs, and rerun determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn speckit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speckit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn ingest_into(out: &Path) {
    let corpus = fixture("corpus");
    let output = speckit(&[
        "ingest",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--transport",
        "mock",
    ]);
    assert_ok(&output);
}

#[test]
fn ingest_writes_space_and_manifest_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    ingest_into(&out_a);
    ingest_into(&out_b);
    let space_a = fs::read(out_a.join("space.jsonl")).unwrap();
    let space_b = fs::read(out_b.join("space.jsonl")).unwrap();
    assert!(!space_a.is_empty());
    assert_eq!(space_a, space_b, "rerun must be byte-identical");
    let manifest_a = fs::read_to_string(out_a.join("manifest.json")).unwrap();
    let manifest_b = fs::read_to_string(out_b.join("manifest.json")).unwrap();
    assert_eq!(manifest_a, manifest_b);
    assert!(manifest_a.contains("\"command\": \"ingest\""));
}

#[test]
fn ingest_of_a_missing_corpus_fails_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = speckit(&[
        "ingest",
        "--corpus",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--transport",
        "mock",
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(
        !out.exists(),
        "no partial artifacts on precondition failure"
    );
}

#[test]
fn index_rejects_an_oversized_svd_dim_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let space_dir = dir.path().join("space");
    ingest_into(&space_dir);
    let output = speckit(&[
        "index",
        "--space",
        space_dir.join("space.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("index").to_str().unwrap(),
        "--svd-dim",
        "5000",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("svd"), "stderr was: {stderr}");
}

#[test]
fn kg_writes_one_graph_file_per_clause() {
    let dir = tempfile::tempdir().unwrap();
    let space_dir = dir.path().join("space");
    ingest_into(&space_dir);
    let kg_out = dir.path().join("kgout");
    let output = speckit(&[
        "kg",
        "--space",
        space_dir.join("space.jsonl").to_str().unwrap(),
        "--out",
        kg_out.to_str().unwrap(),
        "--transport",
        "mock",
        "--svd-dim",
        "4",
    ]);
    assert_ok(&output);
    let store = kg_out.join("kg/TS 24.501");
    let graphs: Vec<_> = fs::read_dir(&store).unwrap().collect();
    // Clauses 1, 5.4.2, 5.5.1, 5.5.2.2, 9.11.3 all carry components.
    assert_eq!(graphs.len(), 5, "expected 5 clause graphs");
    assert!(kg_out.join("kg_index/chunks.jsonl").is_file());
}

fn build_pipeline(dir: &Path) -> (PathBuf, PathBuf) {
    let space_dir = dir.join("space");
    ingest_into(&space_dir);
    let index_dir = dir.join("index");
    assert_ok(&speckit(&[
        "index",
        "--space",
        space_dir.join("space.jsonl").to_str().unwrap(),
        "--out",
        index_dir.to_str().unwrap(),
    ]));
    let kg_dir = dir.join("kgout");
    assert_ok(&speckit(&[
        "kg",
        "--space",
        space_dir.join("space.jsonl").to_str().unwrap(),
        "--out",
        kg_dir.to_str().unwrap(),
        "--transport",
        "mock",
        "--svd-dim",
        "4",
    ]));
    (index_dir, kg_dir.join("kg_index"))
}

#[test]
fn query_prints_answer_and_citations_block() {
    let dir = tempfile::tempdir().unwrap();
    let (index_dir, _) = build_pipeline(dir.path());
    let output = speckit(&[
        "query",
        "--index",
        index_dir.to_str().unwrap(),
        "--question",
        "Which procedure establishes NAS integrity protection?",
        "--k",
        "3",
        "--transport",
        "mock",
    ]);
    assert_ok(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("CITATIONS:"), "{stdout}");
    let citation_lines = stdout
        .lines()
        .skip_while(|l| !l.starts_with("CITATIONS:"))
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .count();
    assert!(citation_lines > 0);
    assert!(citation_lines <= 3, "--k 3 must cap the context: {stdout}");
}

#[test]
fn empty_question_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (index_dir, _) = build_pipeline(dir.path());
    let output = speckit(&[
        "query",
        "--index",
        index_dir.to_str().unwrap(),
        "--question",
        "   ",
        "--transport",
        "mock",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn replay_miss_exits_with_the_gateway_code() {
    let dir = tempfile::tempdir().unwrap();
    let (index_dir, _) = build_pipeline(dir.path());
    let empty_cache = dir.path().join("cache");
    fs::create_dir_all(&empty_cache).unwrap();
    let output = speckit(&[
        "query",
        "--index",
        index_dir.to_str().unwrap(),
        "--question",
        "Anything at all?",
        "--transport",
        "replay",
        "--cache-dir",
        empty_cache.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("replay miss"));
}

#[test]
fn live_transport_without_credentials_exits_with_the_gateway_code() {
    let dir = tempfile::tempdir().unwrap();
    let (index_dir, _) = build_pipeline(dir.path());
    let output = Command::new(env!("CARGO_BIN_EXE_speckit"))
        .args([
            "query",
            "--index",
            index_dir.to_str().unwrap(),
            "--question",
            "Anything?",
            "--transport",
            "live",
        ])
        .env_remove("SPECKIT_ENDPOINT")
        .env_remove("SPECKIT_API_KEY")
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("SPECKIT_ENDPOINT"), "stderr: {stderr}");
}

#[test]
fn eval_of_a_three_task_fixture_produces_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let three = dir.path().join("three.jsonl");
    let all = fs::read_to_string(fixture("tasks.jsonl")).unwrap();
    let first_three: Vec<&str> = all.lines().take(3).collect();
    fs::write(&three, first_three.join("\n")).unwrap();

    let (index_dir, kg_index) = build_pipeline(dir.path());
    let out = dir.path().join("eval");
    let output = speckit(&[
        "eval",
        "--tasks",
        three.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--index",
        index_dir.to_str().unwrap(),
        "--kg-index",
        kg_index.to_str().unwrap(),
        "--transport",
        "mock",
        "--count-check",
        "off",
    ]);
    assert_ok(&output);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + 3 rows
}

#[test]
fn base_eval_records_zero_retrieval_calls_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let output = speckit(&[
        "eval",
        "--tasks",
        fixture("tasks.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--base",
        "--transport",
        "mock",
        "--count-check",
        "off",
    ]);
    assert_ok(&output);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["retrieval_calls"], 0);
    assert_eq!(manifest["config"]["pipeline"], "base");
}

#[test]
fn report_command_re_emits_stored_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    assert_ok(&speckit(&[
        "eval",
        "--tasks",
        fixture("tasks.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--base",
        "--transport",
        "mock",
        "--count-check",
        "off",
    ]));
    let re_out = dir.path().join("re");
    assert_ok(&speckit(&[
        "report",
        "--input",
        out.join("report.json").to_str().unwrap(),
        "--out",
        re_out.to_str().unwrap(),
        "--format",
        "csv",
    ]));
    let original = fs::read(out.join("report.csv")).unwrap();
    let re_emitted = fs::read(re_out.join("report.csv")).unwrap();
    assert_eq!(original, re_emitted);
}

#[test]
fn count_check_error_mode_rejects_non_official_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let output = speckit(&[
        "eval",
        "--tasks",
        fixture("tasks.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--base",
        "--transport",
        "mock",
        "--count-check",
        "error",
    ]);
    assert_eq!(output.status.code(), Some(3));
}
