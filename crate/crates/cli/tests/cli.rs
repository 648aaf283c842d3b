use std::path::Path;
use std::process::{Command, Output};

use bosefield_cli::report::Report;
use bosefield_cli::RunRecord;
use serde_json::json;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosefield")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, value: serde_json::Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, value.to_string()).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn identities_default_passes_and_writes_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/out");
    let o = run(&["identities", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(out.join("identities.csv").exists());
    let rec = RunRecord::read(&out.join("identities.record.json")).unwrap();
    assert_eq!(rec.command, "identities");
    assert!(rec.passed() && rec.seeds.is_empty());
    assert_eq!(rec.verdicts.len(), 7);
}

#[test]
fn fault_injection_names_the_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), json!({"schema_version": 1, "inject_fault": "double_commutator"}));
    let o = run(&["identities", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let s = stdout(&o);
    assert!(s.contains("FAIL double_commutator"), "{s}");
    assert!(s.contains("PASS ccr"), "{s}");
}

#[test]
fn zero_cap_identities_pass_on_vacuum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), json!({"cap": 0}));
    let o = run(&["identities", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rec = RunRecord::read(&tmp.path().join("identities.record.json")).unwrap();
    assert_eq!(rec.results["dim"], 1);
}

#[test]
fn config_errors_exit_three_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for bad in [json!({"beta": 1.2}), json!({"mc_samples": 500}), json!({"typo": true}), json!({"lambda_list": [0.1, 0.5]})] {
        let cfg = write_config(tmp.path(), bad.clone());
        let o = run(&["kernel-check", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 3, "{bad}");
    }
    assert!(!out.exists());
    assert_eq!(code(&run(&["freegas", "--config", "/nonexistent.json"])), 3);
    let o = run(&["freegas", "--workers", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = run(&["freegas", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("plain"));
}

#[test]
fn freegas_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["freegas", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = std::fs::read_to_string(tmp.path().join("freegas.csv")).unwrap();
    assert!(csv.starts_with("quantity,lambda,cutoff_sq,value,tail_bound,scaled\n"));
}

#[test]
fn converge_single_lambda_has_no_trend_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), json!({"lambda_list": [2.0], "mc_samples": 4096}));
    let o = run(&["converge", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--seed", "11"]);
    assert!(matches!(code(&o), 0 | 2), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = RunRecord::read(&tmp.path().join("converge.record.json")).unwrap();
    assert_eq!(rec.seeds, vec![11]);
    assert_eq!(rec.results["rows"].as_array().unwrap().len(), 1);
    assert!(rec.verdicts.iter().all(|v| !v.name.ends_with("_decreasing")));
    assert!(rec.verdict("product_cross_term").unwrap().pass);
    let table = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    let corr = std::fs::read_to_string(tmp.path().join("classical_correlations.csv")).unwrap();
    assert!(corr.starts_with("k,row_mode,col_mode,re,im,stderr\n"));
    // 25 entries for k = 1 and 15 x 15 for k = 2.
    assert_eq!(corr.lines().count(), 1 + 25 + 225);
}

#[test]
fn classical_cutoff_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), json!({"classical_cutoffs": [2.0], "mc_samples": 2000}));
    let o = run(&["classical-cutoff", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "stderr at 2000 samples exceeds the limit");
    let csv = std::fs::read_to_string(tmp.path().join("classical_cutoff.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn report_empty_merge_and_conflicts() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&run(&["report", empty.to_str().unwrap()])), 0);
    let r: Report = serde_json::from_str(&std::fs::read_to_string(empty.join("report.json")).unwrap()).unwrap();
    assert!(r.records.is_empty() && r.all_pass && !r.conflicting_configs);

    let runs = tmp.path().join("runs");
    let a = runs.join("a");
    let b = runs.join("b");
    assert_eq!(code(&run(&["freegas", "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["identities", "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["freegas", "--out", b.to_str().unwrap(), "--seed", "5"])), 0);
    let o = run(&["report", runs.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r: Report = serde_json::from_str(&std::fs::read_to_string(runs.join("report.json")).unwrap()).unwrap();
    assert_eq!(r.records.len(), 3);
    assert!(r.records.iter().all(|e| e.stored_verdicts_agree));
    assert!(r.conflicting_configs);
    assert_eq!(r.configs.len(), 2);
    assert_eq!(r.configs[1].sources, vec!["b/freegas.record.json".to_string()]);
    assert!(runs.join("report.csv").exists());

    // A record from another schema version is rejected.
    let rec = a.join("freegas.record.json");
    let text = std::fs::read_to_string(&rec).unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 9", 1);
    std::fs::write(&rec, text).unwrap();
    assert_eq!(code(&run(&["report", runs.to_str().unwrap()])), 3);
}

#[test]
fn report_recomputes_verdicts_from_results() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["freegas", "--out", tmp.path().to_str().unwrap()])), 0);
    let path = tmp.path().join("freegas.record.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["results"]["number"]["ratio"] = json!(100.0);
    std::fs::write(&path, v.to_string()).unwrap();
    assert_eq!(code(&run(&["report", tmp.path().to_str().unwrap()])), 2);
    let r: Report = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(!r.records[0].stored_verdicts_agree);
}
