use std::path::Path;
use std::process::Command;

fn run(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sparseseq"))
        .current_dir(dir)
        .env_remove("SPARSESEQ_WORKERS")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("tiny.json"),
        r#"{"hidden_units": 4, "epochs": 2, "epochs_step1": 2, "epochs_step23": 1}"#,
    )
    .unwrap();
    run(d, &["gen-synthetic", "--n", "100", "--t", "15", "--missing", "0.3", "--ratio", "1:4", "--seed", "3", "--out", "data.jsonl"]);
    run(d, &["split", "--data", "data.jsonl", "--seed", "1", "--out-dir", "split"]);
    for f in ["train", "val", "test"] {
        assert!(d.join("split").join(format!("{f}.jsonl")).exists());
    }
    run(d, &["pretrain", "--encoder", "gru-d", "--shift", "1", "--data", "split/train.jsonl", "--config", "tiny.json", "--out", "pre.json"]);
    let losses = std::fs::read_to_string(d.join("pre.losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 3);
    run(d, &["pretrain", "--scheme", "forward", "--data", "split/train.jsonl", "--config", "tiny.json", "--out", "fwd.json"]);
    let bad = Command::new(env!("CARGO_BIN_EXE_sparseseq"))
        .current_dir(d)
        .args(["pretrain", "--encoder", "gru-d", "--scheme", "flags", "--data", "split/train.jsonl", "--out", "x.json"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("cannot consume"));

    run(d, &["train", "--init", "pre.json", "--mode", "frozen", "--data-dir", "split", "--config", "tiny.json", "--out", "frozen.json"]);
    run(d, &["train", "--model", "gru", "--imbalance", "cw", "--data-dir", "split", "--config", "tiny.json", "--out", "gru.json"]);
    assert!(d.join("gru.history.csv").exists() && d.join("gru.selection.json").exists());

    let all: serde_json::Value = serde_json::from_str(&run(d, &["eval", "--model", "frozen.json", "--data", "split/test.jsonl"])).unwrap();
    let auprc = all["auprc"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&auprc));
    run(d, &["eval", "--model", "gru.json", "--data", "split/test.jsonl", "--metrics", "auroc", "--out", "m.json"]);
    let some: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("m.json")).unwrap()).unwrap();
    assert!(some.get("auroc").is_some() && some.get("auprc").is_none());
}

#[test]
fn grid_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("grid.json"),
        r#"{
            "imbalance": ["1:1"], "missing": [0.0, 0.3], "models": ["gru", "gru-apc"], "runs": 2,
            "data": {"n_samples": 60, "seq_len": 10},
            "training": {"preset": "desk", "hyper": {
                "gru": {"hidden_units": 4, "epochs": 1},
                "gru-apc": {"hidden_units": 4, "epochs_step1": 1, "epochs_step23": 1}
            }}
        }"#,
    )
    .unwrap();
    run(d, &["grid", "--spec", "grid.json", "--workers", "2", "--out", "r.csv"]);
    let table = run(d, &["report", "--in", "r.csv"]);
    assert!(table.contains("gru-apc n=1 fine-tuned"), "{table}");
    assert_eq!(table.lines().count(), 4);
    let plot = run(d, &["report", "--in", "r.csv", "--format", "plotdata", "--metric", "auroc"]);
    assert_eq!(plot.lines().count(), 5);
    let csv = run(d, &["report", "--in", "r.csv", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 9);
}
