use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lowrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowrank")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn emit(dir: &Path, family: &str) -> String {
    let path = dir.join(format!("{}.json", family.replace(['(', ')', ',', '\''], "_")));
    let out = lowrank(&["pattern", "emit", "--family", family, "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn gcc_of_fully_specified_grid() {
    let dir = tempfile::tempdir().unwrap();
    let pat = dir.path().join("empty.json");
    std::fs::write(&pat, r#"{"rows": 5, "cols": 5, "indexing": "1-based", "unspecified": []}"#).unwrap();
    let out = dir.path().join("gcc.json");
    let run = lowrank(&["gcc", "--pattern", pat.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success());
    let doc = read_json(&out);
    assert_eq!(doc["artifact"], "lowrank");
    assert_eq!(doc["command"], "gcc");
    assert_eq!(doc["body"]["report"]["gcr"], 5);
    assert_eq!(doc["body"]["report"]["gcc"], 0);
}

#[test]
fn emitted_family_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pat = emit(dir.path(), "G(7,3)");
    let doc = read_json(Path::new(&pat));
    assert_eq!(doc["indexing"], "1-based");
    assert_eq!(doc["family"], "G(7,3)");
    assert_eq!(doc["unspecified"].as_array().unwrap().len(), 21);
    assert!(doc["unspecified"][0] == serde_json::json!([1, 1]));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lowrank(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lowrank(&["gcc"]).status.code(), Some(1));
    let missing = lowrank(&["gcc", "--pattern", "/nonexistent/pattern.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
    assert_eq!(lowrank(&["experiment", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(lowrank(&["--help"]).status.code(), Some(0));
}

#[test]
fn complete_writes_a_verified_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let pat = emit(dir.path(), "S(5,2)");
    let out = dir.path().join("cert.json");
    let run = lowrank(&["complete", "--pattern", &pat, "--method", "diagstrip", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let doc = read_json(&out);
    assert_eq!(doc["body"]["verification"]["valid"], true);
    assert_eq!(doc["body"]["certificate"]["achieved_rank"], 2);
    assert_eq!(doc["body"]["all_steps_unique"], true);

    let wrong = lowrank(&["complete", "--pattern", &pat, "--method", "circulantk", "--out", out.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn user_values_are_respected() {
    let dir = tempfile::tempdir().unwrap();
    let pat = emit(dir.path(), "K(2,1,1)");
    let values = dir.path().join("values.json");
    std::fs::write(&values, r#"[[null, 2], [3, 4], [5, "7/2"]]"#).unwrap();
    let out = dir.path().join("cert.json");
    let run = lowrank(&[
        "complete", "--pattern", &pat, "--method", "codimc", "--values", values.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let doc = read_json(&out);
    assert_eq!(doc["body"]["verification"]["valid"], true);
    assert_eq!(doc["body"]["certificate"]["achieved_rank"], 1);
}

#[test]
fn typical_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pat = emit(dir.path(), "G(4,1)");
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let csv = dir.path().join(format!("{name}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_lowrank"))
            .env("LOWRANK_THREADS", threads)
            .args(["typical", "--pattern", &pat, "--samples", "40", "--seed", "5", "--out", out.to_str().unwrap()])
            .args(["--csv", csv.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        let mut doc = read_json(&out);
        doc["wall_time_seconds"] = Value::Null;
        (doc, std::fs::read_to_string(csv).unwrap())
    };
    let (one, csv_one) = run("1", "one.json");
    let (four, csv_four) = run("4", "four.json");
    assert_eq!(one, four);
    assert_eq!(csv_one, csv_four);
    assert!(csv_one.starts_with("rank,frequency\n"));
}

#[test]
fn experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = lowrank(&["experiment", "gcc-gn1-table", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let doc = read_json(&dir.path().join("gcc-gn1-table.json"));
    assert_eq!(doc["body"]["expected_met"], true);
    assert!(dir.path().join("gcc-gn1-table.txt").exists());
    assert!(dir.path().join("gcc-gn1-table.csv").exists());
}

#[test]
fn fiber_of_the_diagonal_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let pat = emit(dir.path(), "G(4,1)");
    let out = dir.path().join("fiber.json");
    let run = lowrank(&["fiber", "--pattern", &pat, "--rank", "2", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(run.status.success());
    let doc = read_json(&out);
    let body = &doc["body"];
    let total = body["solutions"].as_array().unwrap().len() as u64;
    assert_eq!(body["real_count"].as_u64().unwrap() + body["complex_count"].as_u64().unwrap(), total);
    assert_eq!(body["complex_count"].as_u64().unwrap() % 2, 0);
}
