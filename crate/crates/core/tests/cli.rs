use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use schemalabel::corpus::{load_tables, GeneratorConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schemalabel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_jsonl(p: &Path) -> Vec<Value> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

struct Run {
    _dir: TempDir,
    corpus: PathBuf,
    run: PathBuf,
}

impl Run {
    fn manifest(&self) -> PathBuf {
        self.corpus.join("manifest.jsonl")
    }
}

fn trained_run(tables: &str, epochs: &str) -> Run {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    let run_dir = dir.path().join("run");
    ok(&[
        "generate",
        "--out",
        s(&corpus),
        "--seed",
        "5",
        "--tables",
        tables,
    ]);
    ok(&[
        "train",
        "--manifest",
        s(&corpus.join("manifest.jsonl")),
        "--run-dir",
        s(&run_dir),
        "--epochs",
        epochs,
        "--seed",
        "5",
    ]);
    Run {
        _dir: dir,
        corpus,
        run: run_dir,
    }
}

#[test]
fn pipeline_runs_on_defaults() {
    let r = trained_run("60", "4");
    for f in [
        "model.bin",
        "loss_curve.csv",
        "split.json",
        "train_config.json",
    ] {
        assert!(r.run.join(f).exists(), "{f}");
    }
    let curve = fs::read_to_string(r.run.join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);

    let preds = r.run.join("predictions.jsonl");
    ok(&[
        "predict",
        "--model",
        s(&r.run.join("model.bin")),
        "--manifest",
        s(&r.manifest()),
        "--split-file",
        s(&r.run.join("split.json")),
        "--out",
        s(&preds),
    ]);
    let split: Value =
        serde_json::from_str(&fs::read_to_string(r.run.join("split.json")).unwrap()).unwrap();
    let test_ids: BTreeSet<&str> = split["test"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let records = read_jsonl(&preds);
    assert_eq!(records.len(), test_ids.len());
    let tables = load_tables(&r.manifest()).unwrap();
    let expected_columns: usize = tables
        .iter()
        .filter(|t| test_ids.contains(t.id.as_str()))
        .map(|t| t.width())
        .sum();
    let got_columns: usize = records
        .iter()
        .map(|r| r["columns"].as_array().unwrap().len())
        .sum();
    assert_eq!(got_columns, expected_columns);
    assert!(r.run.join("predict_config.json").exists());

    let eval = r.run.join("eval");
    ok(&[
        "evaluate",
        "--predictions",
        s(&preds),
        "--manifest",
        s(&r.manifest()),
        "--out-dir",
        s(&eval),
        "--model",
        s(&r.run.join("model.bin")),
        "--split-file",
        s(&r.run.join("split.json")),
        "--sweep",
        "--repeats",
        "2",
    ]);
    let metrics: Value =
        serde_json::from_str(&fs::read_to_string(eval.join("metrics.json")).unwrap()).unwrap();
    let total = metrics["records"].as_u64().unwrap();
    let by_kind = |k: &str| metrics["by_kind"][k]["count"].as_u64().unwrap_or(0);
    assert_eq!(by_kind("numeric") + by_kind("string"), total);
    let sweep = fs::read_to_string(eval.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("100,") && rows[4].ends_with(",0"));
    assert!(eval.join("label_frequency.csv").exists());
}

#[test]
fn generation_is_reproducible_and_keeps_ambiguity() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["generate", "--out", s(d), "--seed", "9", "--tables", "40"]);
    }
    let files = |d: &Path| {
        let mut out = vec![fs::read(d.join("manifest.jsonl")).unwrap()];
        let mut names: Vec<_> = fs::read_dir(d.join("tables"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        out.extend(names.iter().map(|p| fs::read(p).unwrap()));
        out
    };
    assert_eq!(files(&a), files(&b));

    let labels: BTreeSet<String> = load_tables(&a.join("manifest.jsonl"))
        .unwrap()
        .iter()
        .flat_map(|t| t.columns.iter().filter_map(|c| c.label.clone()))
        .collect();
    let pairs = GeneratorConfig::default().ambiguous_pairs();
    assert!(pairs.len() >= 4);
    for (x, y) in pairs {
        assert!(labels.contains(&x) && labels.contains(&y), "{x} / {y}");
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("gen.json");
    let out = dir.path().join("c");
    fs::write(
        &cfg,
        format!(r#"{{"seed": 21, "tables": 7, "out": "{}"}}"#, s(&out)),
    )
    .unwrap();
    ok(&["generate", "--config", s(&cfg), "--seed", "1"]);
    assert_eq!(load_tables(&out.join("manifest.jsonl")).unwrap().len(), 7);
    let snapshot: Value =
        serde_json::from_str(&fs::read_to_string(out.join("generate_config.json")).unwrap())
            .unwrap();
    assert_eq!(snapshot["seed"], 21);

    // the snapshot alone reproduces the corpus
    let again = dir.path().join("again");
    let mut replay = snapshot.clone();
    replay["out"] = Value::from(s(&again));
    let replay_path = dir.path().join("replay.json");
    fs::write(&replay_path, replay.to_string()).unwrap();
    ok(&["generate", "--config", s(&replay_path)]);
    assert_eq!(
        fs::read(out.join("manifest.jsonl")).unwrap(),
        fs::read(again.join("manifest.jsonl")).unwrap()
    );

    fs::write(&cfg, r#"{"sede": 3}"#).unwrap();
    assert!(!run(&["generate", "--config", s(&cfg), "--out", s(&out)])
        .status
        .success());
}

fn gold_predictions(manifest: &Path, path: &Path, extra_table: Option<&str>) {
    let tables = load_tables(manifest).unwrap();
    let vocab: BTreeSet<String> = tables
        .iter()
        .flat_map(|t| t.columns.iter().filter_map(|c| c.label.clone()))
        .collect();
    let mut lines = Vec::new();
    for t in &tables {
        let columns: Vec<Value> = t
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let gold = c.label.clone().unwrap();
                let mut ranking = vec![gold.clone()];
                ranking.extend(vocab.iter().filter(|l| **l != gold).cloned());
                serde_json::json!({"index": i, "first_pass": gold, "final": gold,
                    "confidence": 1.0, "pass": i + 1, "fallback": false, "ranking": ranking})
            })
            .collect();
        let id = extra_table.unwrap_or(&t.id);
        lines.push(serde_json::json!({"table_id": id, "columns": columns}).to_string());
    }
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn evaluate_scores_gold_as_perfect_and_rejects_unknown_tables() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["generate", "--out", s(&corpus), "--tables", "15"]);
    let manifest = corpus.join("manifest.jsonl");
    let preds = dir.path().join("gold.jsonl");
    gold_predictions(&manifest, &preds, None);
    let eval = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--predictions",
        s(&preds),
        "--manifest",
        s(&manifest),
        "--out-dir",
        s(&eval),
    ]);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(eval.join("metrics.json")).unwrap()).unwrap();
    for key in ["macro_p", "macro_r", "macro_f", "micro_f", "mrr"] {
        assert_eq!(m["overall"][key], 1.0, "{key}");
    }

    gold_predictions(&manifest, &preds, Some("nope"));
    let out = run(&[
        "evaluate",
        "--predictions",
        s(&preds),
        "--manifest",
        s(&manifest),
        "--out-dir",
        s(&eval),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn masks_and_unconstrained_selection() {
    let r = trained_run("40", "2");
    let tables = load_tables(&r.manifest()).unwrap();
    let mask = r.run.join("mask.jsonl");
    let lines: Vec<String> = tables
        .iter()
        .take(5)
        .map(|t| serde_json::json!({"table_id": t.id, "masked": [0]}).to_string())
        .collect();
    fs::write(&mask, lines.join("\n")).unwrap();
    let manifest = r.corpus.join("subset.jsonl");
    let sub: Vec<String> = fs::read_to_string(r.manifest())
        .unwrap()
        .lines()
        .take(5)
        .map(String::from)
        .collect();
    fs::write(&manifest, sub.join("\n")).unwrap();

    let preds = r.run.join("masked.jsonl");
    let model = r.run.join("model.bin");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--manifest",
        s(&manifest),
        "--mask-file",
        s(&mask),
        "--out",
        s(&preds),
    ]);
    let records = read_jsonl(&preds);
    assert_eq!(records.len(), 5);
    for rec in &records {
        let cols = rec["columns"].as_array().unwrap();
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0]["index"], 0);
    }

    let preds = r.run.join("free.jsonl");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--manifest",
        s(&manifest),
        "--unique-headers",
        "false",
        "--out",
        s(&preds),
    ]);
    for rec in read_jsonl(&preds) {
        for c in rec["columns"].as_array().unwrap() {
            assert_eq!(c["final"], c["ranking"][0]);
            assert_eq!(c["fallback"], false);
        }
    }
}

#[test]
fn failures_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["generate", "--out", s(&corpus), "--tables", "12"]);
    let manifest = corpus.join("manifest.jsonl");
    let out = run(&[
        "train",
        "--manifest",
        s(&manifest),
        "--run-dir",
        s(&dir.path().join("run")),
        "--lr",
        "1e300",
        "--epochs",
        "3",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr)
        .to_lowercase()
        .contains("diverge"));

    let missing = run(&[
        "predict",
        "--model",
        s(&dir.path().join("none.bin")),
        "--manifest",
        s(&manifest),
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert!(!missing.status.success());
    assert!(!run(&["train", "--run-dir", s(dir.path())]).status.success());
}
