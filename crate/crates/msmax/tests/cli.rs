//! End-to-end exercises of the `msmax` binary: exit codes, shipped scenario
//! files, report determinism, and the inline `constants` survey.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msmax"))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 report")
}

/// Drops the `# `-prefixed footer lines (timings) that may differ run to run.
fn stable_lines(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with("# "))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn checks_lists_every_identifier() {
    let out = bin().arg("checks").output().unwrap();
    assert!(out.status.success());
    let ids: Vec<&str> = std::str::from_utf8(&out.stdout).unwrap().lines().collect();
    assert_eq!(ids.len(), 12);
    assert!(ids.contains(&"thm21") && ids.contains(&"remark53"));
}

#[test]
fn run_executes_a_shipped_scenario() {
    let out = bin()
        .arg("run")
        .arg(scenario_dir().join("remark53.toml"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout(&out);
    assert!(report.starts_with("msmax report v1\ncheck remark53\n"));
    assert!(report.contains("\nresult pass\n"));
}

#[test]
fn equal_exponent_scenario_reports_a_zero_gap() {
    let out = bin()
        .arg("run")
        .arg(scenario_dir().join("lemma31.toml"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = stdout(&out);
    assert!(report.contains("constant gap 0.0 witness (1.0,1.0,1.0)"));
}

#[test]
fn reports_are_identical_across_reruns() {
    let run = || {
        let out = bin()
            .args(["verify", "constants", "--seed", "7"])
            .output()
            .unwrap();
        assert!(out.status.success());
        stable_lines(&stdout(&out))
    };
    assert_eq!(run(), run());
}

#[test]
fn seed_override_is_echoed() {
    let out = bin()
        .args(["verify", "remark53", "--seed", "99"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("\nseed 99\n"));
}

#[test]
fn out_flag_writes_report_and_constant_table() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.txt");
    let out = bin()
        .args(["verify", "remark53", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(written, stdout(&out));
    let table = std::fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert!(table.starts_with("name\tvalue\twitness\n"));
    assert!(table.contains("far_corner\t"));
}

#[test]
fn unknown_check_exits_with_configuration_error() {
    let out = bin().args(["verify", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown check"));
}

#[test]
fn invalid_scenario_exits_with_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty_corpus.toml");
    std::fs::write(&path, "check = \"thm21\"\n[corpus]\ncount = 0\n").unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one_with_a_witness() {
    // A zero tolerance is unreachable for float identities, so the check
    // fails while the scenario itself stays valid.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("impossible.toml");
    std::fs::write(
        &path,
        r#"
check = "thm21"
resolutions = [4]

[profile]
n = 1
alpha = 0.25
p = [4.0, 4.0]
q = 3.0

[weights]
omega = ["martingale:seed=1", "martingale:seed=2"]

[corpus]
count = 4

[tolerances]
identity = 0.0
"#,
    )
    .unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report = stdout(&out);
    assert!(report.contains(" FAIL "));
    assert!(report.contains("\nresult fail\n"));
}

#[test]
fn constants_survey_runs_from_flags_alone() {
    let out = bin()
        .args([
            "constants",
            "--weight",
            "power:a=0.5",
            "--p",
            "2",
            "--one-weight",
            "--alpha",
            "0.25",
            "-L",
            "3,4",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout(&out);
    assert!(report.contains("check constants"));
    assert!(report.contains("constant a_pq "));
}

#[test]
fn constants_survey_requires_an_exponent_choice() {
    let out = bin().args(["constants", "--p", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
