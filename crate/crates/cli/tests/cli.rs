use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glog_core::learn::{encode_model, MlpModel};
use glog_core::synthetic::{dataset_tensors, shapes_dataset, ShapeConfig};
use glog_core::vectorize::FeatureTable;
use glog_core::volume_io::{write_npz, Split, Tensor, TensorData};
use ndarray::{array, Array1};

fn glog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glog"))
        .args(args)
        .env_remove("GLOG_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shapes_archive(path: &Path, train: usize) {
    let cfg = ShapeConfig::default();
    let tr = shapes_dataset(train, Split::Train, &cfg, 1).unwrap();
    let va = shapes_dataset(4, Split::Val, &cfg, 2).unwrap();
    let (xt, yt) = dataset_tensors(&tr).unwrap();
    let (xv, yv) = dataset_tensors(&va).unwrap();
    let zip = write_npz(&[
        ("train_images", &xt),
        ("train_labels", &yt),
        ("val_images", &xv),
        ("val_labels", &yv),
    ]);
    fs::write(path, zip).unwrap();
}

/// Two well separated clusters along the first of `dim` axes.
fn separable(n: usize, dim: usize, shift: usize) -> FeatureTable {
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            (0..dim)
                .map(|j| {
                    let jitter = (((i + shift) * 31 + j * 17) % 13) as f64 / 13.0;
                    if j == 0 { l as f64 * 4.0 + jitter } else { jitter }
                })
                .collect()
        })
        .collect();
    FeatureTable::new(dim, labels, rows).unwrap()
}

fn write_tables(dir: &Path, train: &FeatureTable, val: &FeatureTable) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("train_features.bin"), train.to_bytes()).unwrap();
    fs::write(dir.join("val_features.bin"), val.to_bytes()).unwrap();
}

#[test]
fn extract_writes_5000_columns_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shapes.npz");
    shapes_archive(&data, 10);
    let run = |out: &str| {
        let o = glog(&["extract", "--dataset", data.to_str().unwrap(), "--out", out, "--threads", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
        o
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(a.to_str().unwrap());
    assert!(stdout(&o).contains("14 samples x 5000 features"));
    run(b.to_str().unwrap());

    let csv = fs::read_to_string(a.join("train_features.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|l| l.split(',').count() == 5001));
    let table = FeatureTable::from_bytes(&fs::read(a.join("train_features.bin")).unwrap()).unwrap();
    assert_eq!((table.len(), table.dim), (10, 5000));
    for name in ["train_features.csv", "train_features.bin", "val_features.bin", "features_meta.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let timing: serde_json::Value = serde_json::from_slice(&fs::read(a.join("timing.json")).unwrap()).unwrap();
    assert!(timing["overall"]["p95_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn empty_dataset_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let images = Tensor::new(vec![0, 28, 28], TensorData::U8(vec![])).unwrap();
    let labels = Tensor::new(vec![0, 1], TensorData::U8(vec![])).unwrap();
    let data = dir.path().join("empty.npz");
    fs::write(&data, write_npz(&[("train_images", &images), ("train_labels", &labels)])).unwrap();
    let o = glog(&["extract", "--dataset", data.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parameter error"), "{}", stderr(&o));
}

#[test]
fn unreadable_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.npz");
    let o = glog(&["extract", "--dataset", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.npz"), "{}", stderr(&o));
}

#[test]
fn train_separable_features_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("f");
    write_tables(&feats, &separable(120, 6, 0), &separable(40, 6, 7));
    let run = |out: &str| {
        let o = glog(&["train", "--features", feats.to_str().unwrap(), "--out", out, "--epochs", "20", "--patience", "5", "--seed", "4"]);
        assert!(o.status.success(), "{}", stderr(&o));
        o
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(a.to_str().unwrap());
    assert!(stdout(&o).contains("val AUC"));
    run(b.to_str().unwrap());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("train_metrics.json")).unwrap()).unwrap();
    assert!(summary["val_acc"].as_f64().unwrap() >= 0.95);
    assert_eq!(fs::read(a.join("model.glm")).unwrap(), fs::read(b.join("model.glm")).unwrap());
    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_auc\n"));
}

#[test]
fn train_without_val_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("train_features.bin"), separable(10, 3, 0).to_bytes()).unwrap();
    let o = glog(&["train", "--features", dir.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("val_features.bin"), "{}", stderr(&o));
}

#[test]
fn train_dimension_mismatch_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    write_tables(dir.path(), &separable(10, 3, 0), &separable(10, 4, 0));
    let o = glog(&["train", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("format error"), "{}", stderr(&o));
}

/// Hidden units copy the two one-hot inputs, outputs favour the matching
/// class.
fn perfect_model() -> MlpModel {
    MlpModel {
        weights: vec![array![[1.0, 0.0], [0.0, 1.0]], array![[5.0, 0.0], [0.0, 5.0]]],
        biases: vec![Array1::zeros(2), Array1::zeros(2)],
    }
}

fn one_hot(labels: &[usize]) -> FeatureTable {
    let rows = labels.iter().map(|&l| vec![(l == 0) as u8 as f64, (l == 1) as u8 as f64]).collect();
    FeatureTable::new(2, labels.to_vec(), rows).unwrap()
}

#[test]
fn eval_perfect_fixture() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.glm"), encode_model(&perfect_model())).unwrap();
    fs::write(dir.path().join("test_features.bin"), one_hot(&[0, 1, 1, 0, 1]).to_bytes()).unwrap();
    let o = glog(&["eval", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["auc"].as_f64(), Some(1.0));
    assert_eq!(m["acc"].as_f64(), Some(1.0));
}

#[test]
fn eval_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    fs::write(dir.path().join("model.glm"), encode_model(&perfect_model())).unwrap();
    fs::write(dir.path().join("test_features.bin"), one_hot(&[1, 1, 1]).to_bytes()).unwrap();
    let o = glog(&["eval", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("undefined"), "{}", stderr(&o));

    let three = FeatureTable::new(2, vec![0, 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    fs::write(dir.path().join("test_features.bin"), three.to_bytes()).unwrap();
    let o = glog(&["eval", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("format error"), "{}", stderr(&o));
}

#[test]
fn stability_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = glog(&["stability", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stability_report.json")).unwrap()).unwrap();
    assert_eq!(report["trials"].as_array().unwrap().len(), 50);

    let o = glog(&["stability", "--out", out, "--noise-eps", "0", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stability_report.json")).unwrap()).unwrap();
    assert!(report["trials"].as_array().unwrap().iter().all(|t| t["sup_distance"].as_f64() == Some(0.0)));

    let o = glog(&["stability", "--out", out, "--trials", "5", "--debug-bound-scale", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decomposition_demo_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = glog(&["decomposition-demo", "--out", dir.path().to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("decomposition_report.json").exists());
}

#[test]
fn config_file_defaults_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        format!(r#"{{"trials": 3, "noise_eps": 0.0, "out": "{}"}}"#, out.display()),
    )
    .unwrap();
    let o = glog(&["stability", "--config", config.to_str().unwrap(), "--trials", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("stability_report.json")).unwrap()).unwrap();
    assert_eq!(report["params"]["n_trials"].as_u64(), Some(2));
    assert_eq!(report["params"]["noise_eps"].as_f64(), Some(0.0));

    fs::write(&config, r#"{"trails": 3}"#).unwrap();
    let o = glog(&["stability", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shapes.npz");
    shapes_archive(&data, 4);
    let o = Command::new(env!("CARGO_BIN_EXE_glog"))
        .args(["extract", "--dataset", data.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--num-lines", "5", "--resolution", "10"])
        .env("GLOG_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("x 200 features"), "{}", stdout(&o));
    assert!(stdout(&o).contains("(3 threads)"), "{}", stdout(&o));
}
