use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn schema() -> PathBuf {
    data_dir().join("colic_schema.json")
}

fn cases() -> PathBuf {
    data_dir().join("sample_cases.csv")
}

fn woe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woe"))
        .args(args)
        .output()
        .expect("spawn woe")
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn mined() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let (schema, cases) = (schema(), cases());
    let out = woe(&[
        "mine",
        "--schema",
        schema.to_str().unwrap(),
        "--data",
        cases.to_str().unwrap(),
        "--out",
        kb.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    (dir, kb)
}

#[test]
fn mine_reports_config_and_rules() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let out = woe(&[
        "mine",
        "--schema",
        schema().to_str().unwrap(),
        "--data",
        cases().to_str().unwrap(),
        "--hypothesis",
        "surgical_lesion",
        "--max-size",
        "2",
        "--min-support",
        "8",
        "--z-crit",
        "2.5",
        "--smoothing",
        "0.5",
        "--alpha-step",
        "0.05",
        "--prior",
        "0.61",
        "--out",
        kb.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = text(&out);
    assert!(stdout.starts_with("# woe "));
    assert!(stdout.contains("\"max_size\":2"));
    assert!(stdout.contains("\"min_support\":8"));
    assert!(stdout.contains("\"z_crit\":2.5"));
    assert!(stdout.contains("# prior: 0.61"));
    assert!(stdout.contains("log odds = 0.447"));
    assert!(stdout.contains("top 10 rules by |W|:"));
    let saved = fs::read_to_string(&kb).unwrap();
    let loaded = woe_core::KnowledgeBase::load(&saved).unwrap();
    assert_eq!(loaded.config().max_size, 2);
    assert!(loaded
        .rules()
        .iter()
        .all(|r| r.group.len() <= 2 && r.estimate.z.abs() >= 2.5));
}

#[test]
fn predict_prints_ledger_for_one_case() {
    let (_dir, kb) = mined();
    let out = woe(&[
        "predict",
        "--kb",
        kb.to_str().unwrap(),
        "--case",
        cases().to_str().unwrap(),
        "--id",
        "h002",
    ]);
    assert!(out.status.success());
    let stdout = text(&out);
    assert!(stdout.contains("# mode: canonical"));
    assert!(stdout.contains("Case h002"));
    assert!(stdout.contains("Final Results:"));
    assert!(stdout.contains("Prior Log Odds     ====="));
    assert!(stdout.contains("=> p(surgical lesion) = "));
    assert_eq!(stdout.matches("Case ").count(), 1);
}

#[test]
fn predict_json_is_parseable() {
    let (_dir, kb) = mined();
    let out = woe(&[
        "predict",
        "--kb",
        kb.to_str().unwrap(),
        "--case",
        cases().to_str().unwrap(),
        "--json",
        "--score-weights",
        "0,1,0",
    ]);
    assert!(out.status.success());
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 300);
    for r in reports {
        let sum = r["prior"].as_f64().unwrap() + r["weight_sum"].as_f64().unwrap();
        assert!((sum - r["posterior"].as_f64().unwrap()).abs() < 1e-9);
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"weight\":1.0"));
}

#[test]
fn compat_odds_fails_on_non_positive_posterior() {
    let (_dir, kb) = mined();
    let kb = kb.to_str().unwrap();
    let cases = cases();
    let all = woe(&[
        "predict",
        "--kb",
        kb,
        "--case",
        cases.to_str().unwrap(),
        "--json",
    ]);
    let reports: serde_json::Value = serde_json::from_slice(&all.stdout).unwrap();
    let id = reports
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["posterior"].as_f64().unwrap() <= 0.0)
        .map(|r| r["case_id"].as_str().unwrap().to_string())
        .expect("some case has a non-positive posterior");

    let args = [
        "predict",
        "--kb",
        kb,
        "--case",
        cases.to_str().unwrap(),
        "--id",
        &id,
    ];
    assert!(woe(&args).status.success());
    let mut compat = args.to_vec();
    compat.push("--compat-odds");
    let out = woe(&compat);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn evaluate_writes_table_and_predictions() {
    let (dir, kb) = mined();
    let preds = dir.path().join("preds.csv");
    let out = woe(&[
        "evaluate",
        "--kb",
        kb.to_str().unwrap(),
        "--data",
        cases().to_str().unwrap(),
        "--threshold",
        "0.6",
        "--predictions",
        preds.to_str().unwrap(),
        "--schema",
        schema().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = text(&out);
    assert!(stdout.contains("# threshold: 0.6"));
    assert!(stdout.contains("Comparison of Predictive Power (300 Cases)"));
    assert!(stdout.contains("\nWeight of Evidence "));
    assert!(stdout.contains("\nLogistic "));
    let rows = fs::read_to_string(&preds).unwrap();
    assert_eq!(rows.lines().count(), 301);
    assert!(rows.starts_with("id,label,woe_probability,woe_predicted"));
}

#[test]
fn inspect_top_and_fuzzy_profile() {
    let (_dir, kb) = mined();
    let out = woe(&["inspect", "--kb", kb.to_str().unwrap(), "--top", "3"]);
    assert!(out.status.success());
    assert!(text(&out).contains("top 3 rules by |W|:"));

    let out = woe(&[
        "inspect",
        "--kb",
        kb.to_str().unwrap(),
        "--fuzzy",
        "pulse:very_high",
        "--data",
        cases().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = text(&out);
    assert!(stdout.contains("# optimal alpha: "));
    let csv: Vec<&str> = stdout
        .lines()
        .skip_while(|l| *l != "alpha,probability,weight")
        .collect();
    assert_eq!(csv.len(), 101);
    let probs: Vec<f64> = csv[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(probs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn errors_exit_nonzero() {
    let (dir, kb) = mined();
    let kb = kb.to_str().unwrap();

    let out = woe(&["predict", "--kb", kb, "--case", "/definitely/missing.csv"]);
    assert!(!out.status.success());

    let other = dir.path().join("other_schema.json");
    fs::write(
        &other,
        r#"[{"name": "x", "kind": "categorical", "values": ["a"]}]"#,
    )
    .unwrap();
    let out = woe(&[
        "evaluate",
        "--kb",
        kb,
        "--data",
        cases().to_str().unwrap(),
        "--schema",
        other.to_str().unwrap(),
    ]);
    assert!(!out.status.success());

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,pain\nz1,screaming\n").unwrap();
    let out = woe(&["predict", "--kb", kb, "--case", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("screaming"));

    let tampered = dir.path().join("tampered.json");
    let saved = fs::read_to_string(kb).unwrap();
    fs::write(&tampered, saved.replacen("\"w\": ", "\"w\": 1", 1)).unwrap();
    let out = woe(&["inspect", "--kb", tampered.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = woe(&[
        "mine",
        "--schema",
        schema().to_str().unwrap(),
        "--data",
        cases().to_str().unwrap(),
        "--z-crit",
        "-1",
        "--out",
        dir.path().join("never.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!dir.path().join("never.json").exists());
}
