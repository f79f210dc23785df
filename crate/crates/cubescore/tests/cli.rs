use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cubescore::ScoreResponse;
use cubescore_core::artifact::ModelArtifact;
use cubescore_core::dataset::write_jsonl;
use cubescore_core::synth::{generate_dataset, SynthConfig};
use cubescore_core::{serialize_trajectory, ScoreLabel, SubjectMeta, TrajectoryPoint, TrajectorySample};
use tempfile::TempDir;

const TINY: [&str; 8] = [
    "--hidden-dim",
    "4",
    "--attention-dim",
    "4",
    "--batch-size",
    "8",
    "--layers",
    "1",
];

fn cubescore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubescore"))
        .args(args)
        .env_remove("CUBESCORE_MODEL")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn line(points: usize, id: &str) -> TrajectorySample {
    let pts = (0..points)
        .map(|i| TrajectoryPoint::new(100.0 + 3.0 * i as f64, 200.0 + ((i * 7) % 5) as f64, 10.0 * i as f64))
        .collect();
    TrajectorySample::new(id, pts, ScoreLabel::new(2), SubjectMeta::default()).unwrap()
}

fn write_samples(dir: &Path, name: &str, samples: &[TrajectorySample]) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, samples).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn synth_file(dir: &Path, per_class: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("synth-{per_class}-{seed}.jsonl"));
    let out = cubescore(&["synth", "--seed", &seed.to_string(), "--per-class", &per_class.to_string(), "-o", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn train_tiny(dir: &Path, data: &Path, epochs: &str, out: &str) -> PathBuf {
    let out_dir = dir.join(out);
    let mut args = vec!["train", "-d", s(data), "--seed", "3", "-o", s(&out_dir), "--epochs", epochs, "-q"];
    args.extend(TINY);
    let result = cubescore(&args);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    out_dir
}

#[test]
fn extract_writes_one_record_per_sample() {
    let dir = TempDir::new().unwrap();
    let input = write_samples(dir.path(), "in.jsonl", &[line(10, "a"), line(23, "b"), line(57, "c")]);
    let output = dir.path().join("out.jsonl");
    let out = cubescore(&["extract", "-i", s(&input), "-o", s(&output)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&output).unwrap();
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    for r in &records {
        assert_eq!(r["feature_set"], "SCSM");
        assert_eq!(r["matrix"].as_array().unwrap().len(), 14);
        let l_std = r["l_std"].as_u64().unwrap() as usize;
        assert!(r["matrix"].as_array().unwrap().iter().all(|row| row.as_array().unwrap().len() == l_std));
    }
}

#[test]
fn extract_reports_the_short_sample() {
    let dir = TempDir::new().unwrap();
    let input = write_samples(dir.path(), "in.jsonl", &[line(12, "fine"), line(9, "stubby")]);
    let out = cubescore(&["extract", "-i", s(&input), "-o", s(&dir.path().join("o.jsonl")), "--l-std", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stubby"));
}

#[test]
fn extract_missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = cubescore(&[
        "extract",
        "-i",
        s(&dir.path().join("absent.jsonl")),
        "-o",
        s(&dir.path().join("o.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn feature_set_flag_selects_rows() {
    let dir = TempDir::new().unwrap();
    let input = write_samples(dir.path(), "in.jsonl", &[line(30, "a")]);
    let output = dir.path().join("m.jsonl");
    let out = cubescore(&["extract", "-i", s(&input), "-o", s(&output), "--feature-set", "M", "--l-std", "5"]);
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_str(fs::read_to_string(&output).unwrap().trim()).unwrap();
    assert_eq!(r["matrix"].as_array().unwrap().len(), 2);
    assert_eq!(r["l_std"], 5);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        assert!(cubescore(&["synth", "--per-class", "10", "--seed", "7", "-o", s(p)]).status.success());
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 40);
    assert!(!bytes.contains(&b'\r'));
}

#[test]
fn synth_requires_a_seed() {
    let dir = TempDir::new().unwrap();
    let out = cubescore(&["synth", "--per-class", "2", "-o", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_total_uses_reference_proportions() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.jsonl");
    assert!(cubescore(&["synth", "--total", "224", "--seed", "1", "-o", s(&path), "--no-meta"]).status.success());
    let text = fs::read_to_string(&path).unwrap();
    let mut counts = [0; 4];
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        counts[v["label"].as_u64().unwrap() as usize] += 1;
        assert!(v["meta"]["age"].is_null());
    }
    assert_eq!(counts, [48, 67, 67, 42]);
}

#[test]
fn train_with_zero_epochs_writes_init_weights() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let out = train_tiny(dir.path(), &data, "0", "run");
    let artifact = ModelArtifact::load(out.join("model.json")).unwrap();
    assert_eq!(artifact.config.epochs, 0);
    let report = fs::read_to_string(out.join("train_report.csv")).unwrap();
    assert_eq!(report.trim(), "epoch,train_loss,train_acc,val_loss,val_acc");
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["n_train"].as_u64().unwrap() + metrics["n_validate"].as_u64().unwrap() + metrics["n_test"].as_u64().unwrap(), 40);
    assert_eq!(metrics["model_version"].as_str().unwrap(), artifact.model_version());
}

#[test]
fn train_and_eval_outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let a = train_tiny(dir.path(), &data, "2", "a");
    let b = train_tiny(dir.path(), &data, "2", "b");
    for name in ["model.json", "train_report.csv", "metrics.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report = fs::read_to_string(a.join("train_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);

    let mut evals = Vec::new();
    for name in ["e1.json", "e2.json"] {
        let path = dir.path().join(name);
        let model = a.join("model.json");
        let out = cubescore(&[
            "eval", "-m", s(&model), "-d", s(&data), "--split-seed", "3", "--knn", "3", "-o", s(&path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        evals.push(fs::read(&path).unwrap());
    }
    assert_eq!(evals[0], evals[1]);
    let v: serde_json::Value = serde_json::from_slice(&evals[0]).unwrap();
    assert_eq!(v["subset"], "test");
    assert_eq!(v["n"], 4);
    assert!(v["knn"]["accuracy"].is_number());

    // The test metrics written by train agree with eval on the same split.
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["test"], v["metrics"]);
}

#[test]
fn eval_needs_a_split_seed_for_subsets() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let run = train_tiny(dir.path(), &data, "0", "run");
    let model = run.join("model.json");
    let out = cubescore(&["eval", "-m", s(&model), "-d", s(&data)]);
    assert_eq!(out.status.code(), Some(1));
    let out = cubescore(&["eval", "-m", s(&model), "-d", s(&data), "--subset", "all"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 40);
}

#[test]
fn model_path_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let run = train_tiny(dir.path(), &data, "0", "run");
    let input = write_samples(dir.path(), "one.json", &[line(40, "q")]);
    let out = Command::new(env!("CARGO_BIN_EXE_cubescore"))
        .args(["score", s(&input)])
        .env("CUBESCORE_MODEL", run.join("model.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn score_prints_a_consistent_response() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let run = train_tiny(dir.path(), &data, "3", "run");
    let model = run.join("model.json");
    let artifact = ModelArtifact::load(&model).unwrap();
    let samples = generate_dataset(&SynthConfig::new(99, 2)).into_samples();
    for (i, sample) in samples.iter().enumerate() {
        let path = dir.path().join(format!("s{i}.json"));
        fs::write(&path, serialize_trajectory(sample)).unwrap();
        let out = cubescore(&["score", "-m", s(&model), s(&path)]);
        assert!(out.status.success());
        let r: ScoreResponse = serde_json::from_slice(&out.stdout).unwrap();
        let best = (0..4).fold(0, |b, k| if r.probabilities[k] > r.probabilities[b] { k } else { b });
        assert_eq!(r.score as usize, best);
        assert!((r.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert_eq!(r.l_std, artifact.normalization.l_std);
        assert_eq!(r.model_version, artifact.model_version());
    }
}

#[test]
fn score_rejects_short_trajectories_with_a_code() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 5);
    let run = train_tiny(dir.path(), &data, "0", "run");
    let input = write_samples(dir.path(), "short.json", &[line(9, "short")]);
    let out = cubescore(&["score", "-m", s(&run.join("model.json")), s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["code"], "too_short");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"id\": 1").unwrap();
    let out = cubescore(&["score", "-m", s(&run.join("model.json")), s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["code"], "malformed_json");
}

#[test]
fn score_with_missing_model_is_an_io_error() {
    let out = cubescore(&["score", "-m", "/nonexistent/model.json", "/nonexistent/t.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablate_emits_twelve_rows() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 10, 8);
    let csv = dir.path().join("ablation.csv");
    let table = dir.path().join("ablation.txt");
    let mut args = vec![
        "ablate", "-d", s(&data), "--seed", "1", "-o", s(&csv), "--table", s(&table), "--epochs", "1", "-q",
    ];
    args.extend(TINY);
    let out = cubescore(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "feature_set,bidirectional,attention,accuracy,precision_macro,f1_macro");
    assert_eq!(lines.len(), 13);
    assert!(fs::read_to_string(&table).unwrap().contains("SCSM"));
}

#[test]
fn stats_writes_tables() {
    let dir = TempDir::new().unwrap();
    let data = synth_file(dir.path(), 25, 4);
    let out_dir = dir.path().join("stats");
    let out = cubescore(&["stats", "-d", s(&data), "-o", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["group", "age", "education"] {
        let text = fs::read_to_string(out_dir.join(format!("distribution_{name}.csv"))).unwrap();
        assert!(text.starts_with("group,n,score_0"), "{name}");
    }
    let corr = fs::read_to_string(out_dir.join("correlations.csv")).unwrap();
    let lines: Vec<&str> = corr.lines().collect();
    assert_eq!(lines[0], "task,r,p,stars");
    assert!(lines[1].starts_with("cct_vs_age,"));
    assert!(lines[2].starts_with("cct_vs_education,"));
}

#[test]
fn stats_rejects_samples_without_metadata() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bare.jsonl");
    assert!(cubescore(&["synth", "--per-class", "3", "--seed", "2", "--no-meta", "-o", s(&data)]).status.success());
    let out = cubescore(&["stats", "-d", s(&data), "-o", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(cubescore(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cubescore(&["--help"]).status.code(), Some(0));
}
