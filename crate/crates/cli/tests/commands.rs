use std::process::Command;

use serde_json::Value;

fn covertour(args: &[&str]) -> (bool, Value, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_covertour")).args(args).output().unwrap();
    let parse = |bytes: &[u8]| serde_json::from_slice(bytes).unwrap_or(Value::Null);
    (out.status.success(), parse(&out.stdout), parse(&out.stderr))
}

#[test]
fn missing_manifest_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("absent.txt");
    let (ok, _, err) = covertour(&["label", "--manifest", manifest.to_str().unwrap()]);
    assert!(!ok);
    assert_eq!(err["error"]["kind"], "missing_input");
}

#[test]
fn invalid_cost_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (ok, _, err) = covertour(&["gen", "--out", out, "--facility-cost", "40,20"]);
    assert!(!ok);
    assert!(err["error"]["message"].as_str().unwrap().contains("facility"));
}

#[test]
fn small_gen_label_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = root.to_str().unwrap();
    let (ok, summary, err) = covertour(&[
        "gen", "--out", out, "--node-sets", "3", "--variants", "4", "--heldout", "1", "--locations", "6",
    ]);
    assert!(ok, "{err}");
    assert!(summary.is_object());
    let manifest = root.join("manifest.txt");
    let manifest = manifest.to_str().unwrap();
    let (ok, _, err) = covertour(&["label", "--manifest", manifest]);
    assert!(ok, "{err}");
    let eval = root.join("eval");
    let (ok, _, err) = covertour(&["eval", "--manifest", manifest, "--oracle", "--out", eval.to_str().unwrap()]);
    assert!(ok, "{err}");
    let ratios = std::fs::read_to_string(eval.join("ratios.csv")).unwrap();
    for line in ratios.lines().skip(1) {
        assert!(line.ends_with("100.00,100.00,100.00,100.00") || line.contains("NA"), "{line}");
    }
}
