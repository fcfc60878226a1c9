use std::path::Path;
use std::process::Command;

use tubespec_cli::config::{parse_config, resolve_workers};
use tubespec_cli::CliError;

const BASE: &str = "alpha = 0.1\nbeta = 0.4\neta = 4\ndelta = 0.1\nend0 = clamped\nend1 = generalized\nk11 = 1\nk12 = 1\nk13 = 1\nk14 = 1\nseed = 5\noutput = out\n";

fn tubespec(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tubespec")).args(args).current_dir(dir).env("TUBESPEC_WORKERS", "2").output().unwrap()
}

fn config_error(text: &str) -> String {
    match parse_config(text) {
        Err(e @ CliError::Config(_)) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn parses_the_example_configuration() {
    let c = parse_config(BASE).unwrap();
    assert_eq!(c.seed, 5);
    assert_eq!(c.spec.physical.eta, 4.0);
    assert!(c.workers.is_none());
}

#[test]
fn rejects_malformed_configurations() {
    assert!(config_error(&format!("{BASE}gamma = 1\n")).contains("unknown key"));
    assert!(config_error(&format!("{BASE}alpha = 0.2\n")).contains("repeated key"));
    assert!(config_error(&format!("{BASE}k01 = 1\n")).contains("only valid"));
    assert!(config_error(&BASE.replace("k14 = 1\n", "")).contains("k14"));
    config_error(&BASE.replace("alpha = 0.1", "alpha = -1"));
    config_error(&BASE.replace("beta = 0.4", "beta = x"));
    config_error(&format!("{BASE}workers = 0\n"));
}

#[test]
fn environment_overrides_the_file_worker_count() {
    assert_eq!(resolve_workers(Some(3), Some("5")).unwrap(), 5);
    assert_eq!(resolve_workers(Some(3), None).unwrap(), 3);
    assert!(resolve_workers(Some(3), Some("zero")).is_err());
    assert!(resolve_workers(None, None).unwrap() >= 1);
}

#[test]
fn spectrum_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), BASE).unwrap();
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let out = tubespec(dir.path(), &["spectrum", "--config", "run.cfg", "--pairs", "4"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
        let json = std::fs::read_to_string(dir.path().join("out/spectrum.json")).unwrap();
        assert!(dir.path().join("out/spectrum.svg").exists());
        csvs.push((csv, json));
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(csvs[0].0.lines().count() > 4);
}

#[test]
fn region_search_accepts_negative_bounds() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), BASE).unwrap();
    let out = tubespec(dir.path(), &["spectrum", "--config", "run.cfg", "--region", "-200,10,0,200"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), BASE).unwrap();
    let out = tubespec(dir.path(), &["verify", "--config", "run.cfg", "--suite", "lemma", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/verify.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
}

#[test]
fn asymptote_table_has_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), BASE).unwrap();
    let out = tubespec(dir.path(), &["asymptote", "--config", "run.cfg", "--n-max", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("out/asymptote.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(tubespec_cli::ASYMPTOTE_CSV_HEADER));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), format!("{BASE}colour = red\n")).unwrap();
    assert_eq!(tubespec(dir.path(), &["spectrum", "--config", "bad.cfg", "--pairs", "2"]).status.code(), Some(2));
    assert_eq!(tubespec(dir.path(), &["spectrum", "--config", "missing.cfg", "--pairs", "2"]).status.code(), Some(2));
    assert_eq!(tubespec(dir.path(), &["sweep", "--config", "bad.cfg", "--study", "nope"]).status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn selfcheck_passes_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = tubespec(dir.path(), &["selfcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn study_gate_thresholds() {
    use tubespec::asymptotics::{StudyKind, StudyReport, StudySummary};
    let report = |kind, monotone, terminal_max, missing: Vec<String>| StudyReport {
        kind,
        rows: Vec::new(),
        summary: StudySummary { monotone, terminal_max, decay: None, missing },
    };
    assert!(tubespec_cli::study_gate(&report(StudyKind::ClampedLimit, Some(true), 5e-4, vec![])).0);
    assert!(!tubespec_cli::study_gate(&report(StudyKind::ClampedLimit, Some(true), 2e-3, vec![])).0);
    assert!(!tubespec_cli::study_gate(&report(StudyKind::ClampedLimit, Some(false), 1e-5, vec![])).0);
    assert!(!tubespec_cli::study_gate(&report(StudyKind::ClampedLimit, Some(true), 1e-5, vec!["n=5".into()])).0);
    assert!(!tubespec_cli::study_gate(&report(StudyKind::K02, None, 0.0, vec![])).0);
}
