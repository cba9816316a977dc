//! End-to-end runs of the `ellikorn` binary: exit codes, report contents and
//! the gallery files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ellikorn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellikorn")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("report written")).expect("report is JSON")
}

/// Writes the gallery into `dir` and returns the path of one spec file.
fn gallery_file(dir: &Path, name: &str) -> PathBuf {
    let out = ellikorn(&["gallery", "--dir", dir.to_str().unwrap(), "--out", dir.join("gallery.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(format!("{name}.json"))
}

fn check_names(report: &Value) -> Vec<String> {
    report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

#[test]
fn analyze_symmetric_gradient_file() {
    let dir = tempfile::tempdir().unwrap();
    let op = gallery_file(dir.path(), "sym_grad_2d");
    let rep = dir.path().join("r.json");
    let out = ellikorn(&["analyze", "--op", op.to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&rep);
    assert_eq!(r["result"]["verdict"], "c_elliptic");
    assert_eq!(r["result"]["deg_p"], 2);
    assert_eq!(r["subcommand"], "analyze");
    assert_eq!(r["inputs"]["op"]["sha256"].as_str().unwrap().len(), 64);
    assert!(check_names(&r).contains(&"documented_verdict".to_string()));
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn missing_operator_file_is_a_file_error() {
    let out = ellikorn(&["analyze", "--op", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file error"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["korn", "--op", "gallery:sym_grad_2d", "--h", "1/0"],
        vec!["project", "--op", "gallery:eps_dev_2d"],
        vec!["analyze", "--op", "gallery:no_such_operator"],
        vec!["frobnicate"],
    ] {
        let out = ellikorn(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn undecided_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    // D ε^D in 3-D has quadratic kernel elements, so degree 2 cannot settle it.
    let out = ellikorn(&["analyze", "--op", "gallery:grad_eps_dev_3d", "--max-degree", "2", "--out", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(read_json(&rep)["result"]["verdict"], "undecided");
}

#[test]
fn deviatoric_korn_constants_increase() {
    let dir = tempfile::tempdir().unwrap();
    let op = gallery_file(dir.path(), "eps_dev_2d");
    let rep = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let out = ellikorn(&[
        "korn",
        "--op",
        op.to_str().unwrap(),
        "--domain",
        "square",
        "--h",
        "1/16,1/32",
        "--p",
        "2",
        "--out",
        rep.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&rep);
    let cs: Vec<f64> = r["result"]["constants"].as_array().unwrap().iter().map(|c| c["C"].as_f64().unwrap()).collect();
    assert_eq!(cs.len(), 2);
    assert!(cs[1] > cs[0], "{cs:?}");
    assert!(check_names(&r).contains(&"korn_dichotomy_growth".to_string()));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("h,C,"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn gallery_files_document_verdicts_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    gallery_file(dir.path(), "grad_2d");
    let r = read_json(&dir.path().join("gallery.json"));
    let names = check_names(&r);
    assert_eq!(names.iter().filter(|n| n.starts_with("round_trip_")).count(), 9);
    for (name, verdict) in [("grad_eps_dev_3d", "c_elliptic"), ("eps_dev_3d", "c_elliptic"), ("eps_dev_2d", "not_c_elliptic")] {
        let spec = read_json(&dir.path().join(format!("{name}.json")));
        assert_eq!(spec["expected_verdict"], verdict, "{name}");
        assert!(spec["terms"].as_array().is_some_and(|t| !t.is_empty()));
    }
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = ellikorn(&["analyze", "--op", "gallery:sym_grad_2d"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["result"]["verdict"], "c_elliptic");
    // The real symbol minimum of ε is 1/√2; 16 digits after the point plus the exponent.
    let line = text.lines().find(|l| l.contains("min_real_singular_value")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    assert!(number.starts_with("7.0710678118654") && number.ends_with("e-1"), "{number}");
    assert_eq!(number.split(['.', 'e']).nth(1).unwrap().len(), 16, "{number}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let rep = dir.path().join(format!("{tag}.json"));
        let out = ellikorn(&["maximal", "--domain", "lshape", "--seed", "9", "--trials", "5", "--out", rep.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(rep).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
