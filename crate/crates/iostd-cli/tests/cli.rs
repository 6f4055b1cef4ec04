//! End-to-end tests of the command-line interface: exit codes, output
//! files, and determinism, driven against the shipped corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{}", env!("CARGO_MANIFEST_DIR"), name)
}

fn iostd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iostd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iostd-cli-{}-{}", tag, std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn validate_accepts_the_corpus() {
    let out = iostd(&["validate", &corpus("bank.iostd"), &corpus("tiny.iostd")]);
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn validate_rejects_an_overlap_with_a_witness() {
    let dir = temp_dir("overlap");
    let mutant = std::fs::read_to_string(corpus("bank.iostd"))
        .unwrap()
        .replace("Idle: open && !busy;", "Idle: open;");
    let path = dir.join("mutant.iostd");
    std::fs::write(&path, mutant).unwrap();
    let out = iostd(&["validate", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("state-overlap"), "{}", stdout);
    assert!(stdout.contains("witness="), "{}", stdout);
}

#[test]
fn validate_missing_file_is_a_usage_error() {
    let out = iostd(&["validate", "no/such/file.iostd"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn run_is_deterministic_per_manifest() {
    let dir = temp_dir("determinism");
    let a = dir.join("a.trace");
    let b = dir.join("b.trace");
    for path in [&a, &b] {
        let out = iostd(&[
            "run",
            &corpus("manifests/conservation.manifest"),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
    }
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap(),
        "same manifest, same bytes"
    );
}

#[test]
fn run_seed_override_is_recorded_and_changes_nothing_else_structural() {
    let out = iostd(&[
        "run",
        &corpus("manifests/conservation.manifest"),
        "--seed",
        "99",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("# seed: 99"), "{}", stdout);
}

#[test]
fn run_policy_flag_is_recorded_in_the_header() {
    let out = iostd(&[
        "run",
        &corpus("manifests/conservation.manifest"),
        "--policy",
        "havoc",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("# policy: havoc"), "{}", stdout);
}

#[test]
fn run_with_a_ret_injection_aborts_with_exit_1() {
    let dir = temp_dir("abort");
    let path = dir.join("abort.trace");
    let out = iostd(&[
        "run",
        &corpus("manifests/abort.manifest"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    let text = std::fs::read_to_string(&path).unwrap();
    let last_event = text.lines().rfind(|l| !l.starts_with('#')).expect("events");
    assert!(last_event.starts_with("abort | "), "{}", text);
}

#[test]
fn explore_conservation_scenario_is_clean() {
    let out = iostd(&["explore", &corpus("manifests/conservation.manifest")]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("# exploration reachable="), "{}", stdout);
    assert!(stdout.contains("violations=0"), "{}", stdout);
}

#[test]
fn explore_exclusion_removed_mutant_reports_a_witness() {
    let dir = temp_dir("exclusion");
    let mutant = std::fs::read_to_string(corpus("bank.iostd"))
        .unwrap()
        .replace("    exclusions {\n      Wait: [delete];\n    }\n", "");
    std::fs::write(dir.join("bank.iostd"), mutant).unwrap();
    let manifest = std::fs::read_to_string(corpus("manifests/exclusion.manifest"))
        .unwrap()
        .replace("../bank.iostd", "bank.iostd");
    let path = dir.join("exclusion.manifest");
    std::fs::write(&path, manifest).unwrap();

    let out = iostd(&["explore", path.to_str().unwrap()]);
    assert_eq!(
        exit_code(&out),
        1,
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("violation | chaos-reached"), "{}", stdout);
    assert!(
        stdout.contains("deliver"),
        "witness trace embedded: {}",
        stdout
    );
}

#[test]
fn explore_budget_zero_exits_3() {
    let out = iostd(&[
        "explore",
        &corpus("manifests/conservation.manifest"),
        "--bound",
        "0",
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn export_is_reproducible_and_bounded() {
    let dir = temp_dir("export");
    let a = dir.join("a.machine");
    let b = dir.join("b.machine");
    for path in [&a, &b] {
        let out = iostd(&[
            "export",
            &corpus("manifests/tiny_export.manifest"),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
    }
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap()
    );

    let truncated = dir.join("truncated.machine");
    let out = iostd(&[
        "export",
        &corpus("manifests/tiny_export.manifest"),
        "--bound",
        "1",
        "--out",
        truncated.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
    let text = std::fs::read_to_string(&truncated).unwrap();
    assert!(text.contains("# truncated"), "{}", text);
}

#[test]
fn check_audit_accepts_a_recorded_trace() {
    let dir = temp_dir("audit");
    let trace = dir.join("run.trace");
    let out = iostd(&[
        "run",
        &corpus("manifests/sequential.manifest"),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let out = iostd(&["check", "audit", trace.to_str().unwrap()]);
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn check_enabledness_reports_gaps_as_json_lines() {
    let out = iostd(&[
        "check",
        "enabledness",
        &corpus("tiny.iostd"),
        "--format",
        "json-lines",
    ]);
    assert_eq!(exit_code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for line in stdout.lines() {
        let value: serde_json::Value = serde_json::from_str(line).expect("json line");
        assert_eq!(value["code"], "enabledness-gap");
    }
}

#[test]
fn check_serializability_is_clean_for_commuting_deposits() {
    let out = iostd(&[
        "check",
        "serializability",
        &corpus("manifests/twodeposits.manifest"),
    ]);
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn trace_and_report_files_land_where_asked() {
    let dir = temp_dir("outfiles");
    let trace = dir.join("t.trace");
    let report = dir.join("r.report");
    assert_eq!(
        exit_code(&iostd(&[
            "run",
            &corpus("manifests/sequential.manifest"),
            "--out",
            trace.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        exit_code(&iostd(&[
            "explore",
            &corpus("manifests/conservation.manifest"),
            "--out",
            report.to_str().unwrap()
        ])),
        0
    );
    assert!(Path::new(&trace).exists());
    assert!(Path::new(&report).exists());
}
