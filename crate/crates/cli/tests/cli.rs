use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sca-doe"));
    cmd.env_remove("SCA_DOE_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn plans() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = p(dir.path());
    for name in ["x", "y"] {
        let o = run(&["simulate", "--mode", "random", "--n", "1000", "--seed", "7", "--out-dir", d, "--name", name]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("n=1000"));
        assert!(stdout(&o).contains("seed=7"));
    }
    let x = fs::read(dir.path().join("x.traces.bin")).unwrap();
    let y = fs::read(dir.path().join("y.traces.bin")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn semifixed_manifest_label() {
    let dir = TempDir::new().unwrap();
    let o = run(&["simulate", "--mode", "semifixed", "--hw-lo", "80", "--hw-hi", "100", "--n", "20", "--seed", "3", "--out-dir", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("traces.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["set_label"], "semi_fixed");
}

#[test]
fn inverted_weight_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["simulate", "--mode", "semifixed", "--hw-lo", "90", "--hw-hi", "10", "--seed", "1", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("90..=10"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(2));
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--out-dir", p(dir), "--name", name];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn analyze_metrics_and_shape_mismatch() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulate(d, "a", &["--n", "300", "--seed", "1", "--samples", "40", "--leak-index", "20"]);
    simulate(d, "short", &["--n", "300", "--seed", "2", "--samples", "30", "--leak-index", "20"]);

    let res = d.join("cpa.json");
    let svg = d.join("cpa.svg");
    let o = run(&["analyze", "--metric", "cpa", "--input", p(&d.join("a")), "--out", p(&res), "--svg", p(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("corr_peak summary 1"), "{}", stdout(&o));
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    assert!((result["summary"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let o = run(&["analyze", "--metric", "ttest", "--input", p(&d.join("a")), "--second", p(&d.join("short"))]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = run(&["analyze", "--metric", "chi2", "--input", p(&d.join("a")), "--second", p(&d.join("a"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("chi2_neg_log_p summary 0"), "{}", stdout(&o));

    let o = run(&["analyze", "--metric", "ttest", "--input", p(&d.join("missing"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "--metric", "cpa", "--input", p(&d.join("missing"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn preprocess_then_report_curve() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulate(d, "raw", &["--n", "200", "--seed", "5", "--samples", "60", "--leak-index", "30", "--noise", "1"]);
    let steps = d.join("steps.json");
    fs::write(&steps, r#"[{"op": "lowpass", "strength": 2}, {"op": "resample", "window": 2}]"#).unwrap();
    let out = d.join("proc/cooked");
    let o = run(&["preprocess", "--input", p(&d.join("raw")), "--steps", p(&steps), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("proc/cooked.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["sample_count"], 30);
    assert_eq!(manifest["history"].as_array().unwrap().len(), 2);

    let res = d.join("r.json");
    let o = run(&["analyze", "--metric", "cpa", "--input", p(&out), "--out", p(&res)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = d.join("curve.svg");
    let o = run(&["report", "--result", p(&res), "--out", p(&svg), "--threshold", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&svg).unwrap().contains("class=\"curve\""));
}

#[test]
fn replay_computes_effects_from_csv() {
    let dir = TempDir::new().unwrap();
    let csv = plans().join("uc1_responses.csv");
    let o = run(&["doe", "--replay", p(&csv), "--out-dir", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let effect_row = text.lines().find(|l| l.starts_with("Effect")).expect("effect row");
    let effects: Vec<f64> = effect_row.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
    let expected = [0.0902, -0.0201, -0.0007, -0.0116, 0.0012, 0.0001, -0.0003];
    for (got, want) in effects.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-4 + 1e-12, "{got} vs {want}");
    }
    assert!(text.contains("Vital few: A, B"));
    let report = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("| A | 72.80% | 72.80% |"));
    assert!(dir.path().join("iteration-1-pareto.svg").exists());
}

#[test]
fn replay_with_plan_applies_its_criterion() {
    let dir = TempDir::new().unwrap();
    let o = run(&[
        "doe",
        "--plan",
        p(&plans().join("uc1.json")),
        "--replay",
        p(&plans().join("uc1_responses.csv")),
        "--out-dir",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Passing experiments: 5, 6"), "{}", stdout(&o));
}

#[test]
fn malformed_replay_is_rejected() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "experiment,round_1\n1,0.1\n2,0.2\n").unwrap();
    let o = run(&["doe", "--replay", p(&csv), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment 3 missing"), "{}", stderr(&o));
}

#[test]
fn plan_on_simulator_appends_an_iteration() {
    let dir = TempDir::new().unwrap();
    let plan = plans().join("uc1.json");
    let args = ["doe", "--plan", p(&plan), "--rounds", "1", "--seed", "11", "--out-dir", p(dir.path())];
    let first = run(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.lines().any(|l| l.starts_with("Effect")));
    assert!(text.lines().any(|l| l.starts_with("Coefficient")));
    assert!(text.contains("Vital few:"));

    let ledger: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["iterations"].as_array().unwrap().len(), 1);
    assert_eq!(ledger["iterations"][0]["plan"]["seed"], 11);

    let second = run(&args);
    assert!(second.status.success());
    let ledger: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ledger.json")).unwrap()).unwrap();
    let its = ledger["iterations"].as_array().unwrap();
    assert_eq!(its.len(), 2);
    assert_eq!(its[0]["responses"], its[1]["responses"], "same seed, same responses");
    let report = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("## Iteration 2"));
}

#[test]
fn next_iteration_from_decisions() {
    let dir = TempDir::new().unwrap();
    let d = p(dir.path());
    let o = run(&["doe", "--plan", p(&plans().join("uc1.json")), "--replay", p(&plans().join("uc1_responses.csv")), "--out-dir", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    let decisions = dir.path().join("decisions.json");
    fs::write(
        &decisions,
        r#"{"fix": [{"factor": "A", "level": "high"}],
            "new_factors": [{"name": "Max shift", "parameter": "/steps/0/max_shift", "low": 10, "high": 30}],
            "note": "alignment on the end anchor is settled"}"#,
    )
    .unwrap();
    let o = run(&["doe", "--next", p(&decisions), "--rounds", "1", "--out-dir", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("A = Max shift"), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("alignment on the end anchor is settled"));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let mut plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(plans().join("uc1.json")).unwrap()).unwrap();

    plan["factors"][1]["id"] = "A".into();
    let dup = dir.path().join("dup.json");
    fs::write(&dup, plan.to_string()).unwrap();
    let o = run(&["doe", "--plan", p(&dup), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/factors/1/id"), "{}", stderr(&o));

    plan["factors"][1]["id"] = "B".into();
    plan["factors"][2]["low"] = serde_json::json!({"nested": true});
    let typed = dir.path().join("typed.json");
    fs::write(&typed, plan.to_string()).unwrap();
    let o = run(&["doe", "--plan", p(&typed), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/factors/2/low"), "{}", stderr(&o));
    assert!(!dir.path().join("ledger.json").exists());
}

#[test]
fn report_regenerates_from_ledger() {
    let dir = TempDir::new().unwrap();
    let o = run(&["doe", "--replay", p(&plans().join("uc1_responses.csv")), "--out-dir", p(dir.path())]);
    assert!(o.status.success());
    let out = dir.path().join("again/report.md");
    let o = run(&["report", "--ledger", p(&dir.path().join("ledger.json")), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(dir.path().join("report.md")).unwrap());
    assert!(dir.path().join("again/iteration-1-pareto.svg").exists());
}
