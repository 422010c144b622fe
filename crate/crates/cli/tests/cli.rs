use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 5

[sim.length]
min_s = 10.0
max_s = 20.0

[model]
state_hidden = 16
traj_hidden = 8
context = 8
n_heads_attn = 2

[train]
batch_size = 16
epochs = 1

[experiment]
n_sequences = 40
latency_samples = 20
"#;

fn unifi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unifi"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run unifi")
}

fn ok(args: &[&str]) -> Output {
    let out = unifi(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["simulate", "--out", p(&a), "--n", "3", "--seed", "9"]);
    ok(&["simulate", "--out", p(&b), "--n", "3", "--seed", "9"]);
    ok(&["simulate", "--out", p(&c), "--n", "3", "--seed", "10"]);
    let (a, b, c) = (fs::read(a).unwrap(), fs::read(b).unwrap(), fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.iter().filter(|&&x| x == b'\n').count(), 3);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nstate_hiden = 3\n").unwrap();
    let out = unifi(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("x")), "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&cfg, "[experiment]\ntest_fraction = 1.5\n").unwrap();
    let out = unifi(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("x")), "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    fs::write(&trace, "{\"n_sub\":1,\"n_rx\":1}\n{\"ts\":0.0,\"csi\":[[1.0]]}\n").unwrap();
    let out = unifi(&["extract", "--trace", p(&trace), "--out", p(&dir.path().join("f"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let model = dir.path().join("m.bin");
    fs::write(&model, b"not a model").unwrap();
    let out = unifi(&["infer", "--model", p(&model), "--features", p(&trace), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    let cfg = d("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let c = p(&cfg);

    ok(&["simulate", "--config", c, "--out", p(&d("data.jsonl"))]);
    ok(&["synthesize-csi", "--config", c, "--id", "2", "--out", p(&d("trace.jsonl"))]);
    ok(&["extract", "--config", c, "--trace", p(&d("trace.jsonl")), "--out", p(&d("feat.jsonl"))]);
    ok(&["train", "--config", c, "--dataset", p(&d("data.jsonl")), "--out", p(&d("m1.bin"))]);
    ok(&["train", "--config", c, "--dataset", p(&d("data.jsonl")), "--out", p(&d("m2.bin"))]);
    assert_eq!(fs::read(d("m1.bin")).unwrap(), fs::read(d("m2.bin")).unwrap());

    ok(&["infer", "--model", p(&d("m1.bin")), "--features", p(&d("feat.jsonl")), "--out", p(&d("pred.jsonl"))]);
    let preds = fs::read_to_string(d("pred.jsonl")).unwrap();
    assert!(!preds.is_empty());
    for line in preds.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let probs = v["event_probs"].as_array().unwrap();
        let sum: f64 = probs.iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    let report = d("report");
    ok(&["eval", "--config", c, "--dataset", p(&d("data.jsonl")), "--model", p(&d("m1.bin")), "--out", p(&report)]);
    for f in ["report.jsonl", "cdf.tsv", "confusion.tsv", "train_log.tsv"] {
        assert!(report.join(f).exists(), "{f}");
    }
}
