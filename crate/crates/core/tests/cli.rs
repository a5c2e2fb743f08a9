//! Command-line behaviour: listings, rank reports, check suites, exit
//! codes and input diagnostics.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use twistcb::cli::{run_from, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    root.to_string_lossy().into_owned()
}

fn json(out: &str) -> Value {
    serde_json::from_str(out).unwrap_or_else(|e| panic!("{e}: {out}"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistcb"))
}

#[test]
fn weights_listing() {
    let out = run_from(["twistcb", "weights", "--algebra", "A1", "--level", "1"]);
    assert_eq!(out.code, EXIT_PASS);
    assert_eq!(json(&out.stdout).as_array().unwrap().len(), 2);

    let out = run_from(["twistcb", "weights", "--algebra", "A2", "--level", "0"]);
    assert_eq!(json(&out.stdout).as_array().unwrap().len(), 1);

    let out = run_from(["twistcb", "weights", "--algebra", "A2", "--level", "1", "--rho", "outer"]);
    let rows = json(&out.stdout);
    let orbit = |w: &[i64]| {
        rows.as_array()
            .unwrap()
            .iter()
            .find(|r| r["weight"] == serde_json::json!(w))
            .map(|r| r["orbit"].as_u64().unwrap())
            .unwrap()
    };
    assert_ne!(orbit(&[0, 0]), orbit(&[1, 0]));
    assert_eq!(orbit(&[1, 0]), orbit(&[0, 1]));

    let out = run_from(["twistcb", "weights", "--algebra", "A2", "--level", "2", "--format", "csv"]);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "weight,level");
    assert_eq!(lines.len(), 7);
}

#[test]
fn rank_reports() {
    let cases = [("genus1_node.json", 2, "degeneration"), ("p1_three_omega.json", 0, "coinvariants"), ("p1_three_trivial.json", 1, "coinvariants")];
    for (file, rank, method) in cases {
        let path = data(file);
        let out = run_from(["twistcb", "rank", "--input", &path, "--algebra", "A1", "--level", "1"]);
        assert_eq!(out.code, EXIT_PASS, "{file}: {}", out.stderr);
        let r = json(&out.stdout);
        assert_eq!(r["rank"], rank, "{file}");
        assert_eq!(r["stabilized"], true, "{file}");
        assert_eq!(r["method"], method, "{file}");
        assert!(r["depth"].is_u64());
    }
    let path = data("p1_three_trivial.json");
    let out = run_from(["twistcb", "rank", "--input", &path, "--format", "csv"]);
    let mut lines = out.stdout.lines();
    assert_eq!(lines.next(), Some("graph,labels,level,rank,stabilized,depth,method"));
    assert!(lines.next().unwrap().contains(",1,true,"));
}

#[test]
fn twisted_rank_report() {
    let path = data("a2_outer_two_branch.json");
    let out = run_from(["twistcb", "rank", "--input", &path, "--algebra", "A2", "--level", "2", "--rho", "outer"]);
    assert_eq!(out.code, EXIT_PASS, "{}", out.stderr);
    let r = json(&out.stdout);
    assert_eq!((r["rank"].as_u64(), r["stabilized"].as_bool()), (Some(1), Some(true)));
}

#[test]
fn separate_labels_file_overrides_embedded_labels() {
    let dir = std::env::temp_dir().join(format!("twistcb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let labels = dir.join("labels.json");
    std::fs::write(&labels, r#"{"a": {"weight": [1]}, "b": {"weight": [1]}, "c": {"weight": [0]}}"#).unwrap();
    let path = data("p1_three_trivial.json");
    let out = run_from(["twistcb", "rank", "--input", &path, "--labels", labels.to_str().unwrap()]);
    assert_eq!(json(&out.stdout)["rank"], 1);
    std::fs::write(&labels, r#"{"a": {"weight": [1]}, "b": {"weight": [0]}, "c": {"weight": [0]}}"#).unwrap();
    let out = run_from(["twistcb", "rank", "--input", &path, "--labels", labels.to_str().unwrap()]);
    assert_eq!(json(&out.stdout)["rank"], 0);
}

#[test]
fn input_diagnostics() {
    let dir = std::env::temp_dir().join(format!("twistcb-diag-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"p\": 2,\n  \"vertices\": [{\"genus\": 0}\n}\n").unwrap();
    let out = run_from(["twistcb", "rank", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("line 4"), "{}", out.stderr);

    let missing = dir.join("missing_field.json");
    std::fs::write(&missing, r#"{"vertices": [{"genus": 0}]}"#).unwrap();
    let out = run_from(["twistcb", "rank", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("missing field `p`"), "{}", out.stderr);

    let unlabeled = dir.join("unlabeled.json");
    std::fs::write(&unlabeled, r#"{"p": 2, "vertices": [{"genus": 0}], "legs": [{"vertex": 0, "label": "a"}, {"vertex": 0, "label": "b"}, {"vertex": 0, "label": "c"}]}"#).unwrap();
    let out = run_from(["twistcb", "rank", "--input", unlabeled.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_USAGE);

    let unstable = dir.join("unstable.json");
    std::fs::write(&unstable, r#"{"p": 2, "vertices": [{"genus": 0}], "legs": [{"vertex": 0, "label": "a"}], "labels": {"a": {"weight": [0]}}}"#).unwrap();
    let out = run_from(["twistcb", "rank", "--input", unstable.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("unstable"), "{}", out.stderr);
}

#[test]
fn check_suites_pass() {
    for args in [
        vec!["check", "virasoro", "--algebra", "A1", "--level", "1", "--depth", "3"],
        vec!["check", "sewing", "--algebra", "A1", "--level", "1"],
        vec!["check", "torsor"],
    ] {
        let mut argv = vec!["twistcb"];
        argv.extend(&args);
        let out = run_from(argv);
        assert_eq!(out.code, EXIT_PASS, "{args:?}: {}", out.stdout);
        let r = json(&out.stdout);
        assert_eq!(r["pass"], true);
        assert!(!r["checks"].as_array().unwrap().is_empty());
    }
}

#[test]
fn torsor_suite_reports_obstruction() {
    let out = run_from(["twistcb", "check", "torsor"]);
    let r = json(&out.stdout);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.contains("obstruction")));
}

#[test]
fn output_is_deterministic() {
    let args = ["twistcb", "check", "virasoro", "--algebra", "A1", "--level", "2", "--depth", "2", "--seed", "7"];
    assert_eq!(run_from(args).stdout, run_from(args).stdout);
    let path = data("genus1_node.json");
    let a = run_from(["twistcb", "rank", "--input", &path]);
    let b = run_from(["twistcb", "rank", "--input", &path]);
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["bogus"],
        vec!["check", "nosuch"],
        vec!["weights", "--level", "4"],
        vec!["weights", "--p", "11"],
        vec!["weights", "--p", "4"],
        vec!["weights", "--algebra", "Q7"],
        vec!["weights", "--depth", "7"],
        vec!["check", "torsor", "--format", "csv"],
        vec!["rank", "--input", "/nonexistent/graph.json"],
    ] {
        let mut argv = vec!["twistcb"];
        argv.extend(&args);
        assert_eq!(run_from(argv).code, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn binary_exit_codes_and_depth_override() {
    let out = bin().args(["weights", "--level", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let out = bin().args(["check", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = bin().args(["weights", "--depth", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = bin().args(["weights", "--depth", "7"]).env("TWISTCB_MAX_DEPTH", "8").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let out = bin().args(["weights"]).env("TWISTCB_MAX_DEPTH", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn computational_refusals_exit_one() {
    let dir = std::env::temp_dir().join(format!("twistcb-refuse-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = dir.join("genus2.json");
    std::fs::write(&g, r#"{"p": 2, "vertices": [{"genus": 2}], "legs": [{"vertex": 0, "label": "a"}], "labels": {"a": {"weight": [0]}}}"#).unwrap();
    let out = run_from(["twistcb", "rank", "--input", g.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_FAIL, "{}", out.stderr);
}
