use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use glog_core::bifiltration::GlogParams;
use glog_core::learn::{decode_model, encode_model, evaluate, fit_classifier, Samples, TrainConfig};
use glog_core::pipeline::{extract_splits, timing_summary, PipelineConfig};
use glog_core::stability::{run_decomposition_suite, run_stability_suite, StabilityParams};
use glog_core::synthetic::{dataset_tensors, shapes_splits, ShapeConfig};
use glog_core::vectorize::{FeatureConfig, FeatureTable};
use glog_core::volume_io::{list_npz_entries, write_npz, Dataset, Split};
use glog_core::Error;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{pick, FileConfig};
use crate::output::{read, OutDir};
use crate::{Common, FeatureArgs, TrainArgs};

const META_FILE: &str = "features_meta.json";
const MODEL_FILE: &str = "model.glm";

struct Ctx {
    file: FileConfig,
    out: OutDir,
    seed: u64,
    pool: rayon::ThreadPool,
}

fn setup(common: &Common) -> Result<Ctx> {
    let file = FileConfig::load(common.config.as_deref())?;
    let out = pick(common.out.clone(), file.out.clone(), PathBuf::from("glog-out"));
    let threads = pick(common.threads, file.threads, 0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    Ok(Ctx {
        seed: pick(common.seed, file.seed, 0),
        out: OutDir::create(&out)?,
        file,
        pool,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureMeta {
    dataset: PathBuf,
    sample_dims: Vec<usize>,
    num_classes: usize,
    dim: usize,
    pipeline: PipelineConfig,
    features: FeatureConfig,
    samples: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
struct Timing {
    samples: usize,
    mean_seconds: f64,
    p95_seconds: f64,
}

impl Timing {
    fn of(seconds: &[f64]) -> Self {
        let (mean, p95) = timing_summary(seconds);
        Timing {
            samples: seconds.len(),
            mean_seconds: mean,
            p95_seconds: p95,
        }
    }
}

#[derive(Debug, Serialize)]
struct TimingReport {
    overall: Timing,
    splits: BTreeMap<String, Timing>,
    threads: usize,
    note: &'static str,
}

fn pipeline_config(args: &FeatureArgs, file: &FileConfig) -> Result<PipelineConfig> {
    let d = PipelineConfig::default();
    let side = pick(args.resolution, file.resolution, d.resolution.0);
    let cfg = PipelineConfig {
        glog: GlogParams {
            sigma_gauss: pick(args.sigma_gauss, file.sigma_gauss, d.glog.sigma_gauss),
            sigma_log: pick(args.sigma_log, file.sigma_log, d.glog.sigma_log),
        },
        num_lines: pick(args.num_lines, file.num_lines, d.num_lines),
        bandwidth: pick(args.bandwidth, file.bandwidth, d.bandwidth),
        weight_power: pick(args.weight_power, file.weight_power, d.weight_power),
        resolution: (side, side),
    };
    if !(cfg.glog.sigma_log > 0.0) {
        bail!(Error::Parameter(format!("sigma_log must be positive, got {}", cfg.glog.sigma_log)));
    }
    Ok(cfg)
}

pub fn extract(dataset: Option<PathBuf>, args: FeatureArgs, common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let path = dataset
        .or_else(|| ctx.file.dataset.clone())
        .ok_or_else(|| Error::Parameter("--dataset is required".into()))?;
    let cfg = pipeline_config(&args, &ctx.file)?;
    let bytes = read(&path)?;
    let entries = list_npz_entries(&bytes).with_context(|| format!("reading {}", path.display()))?;
    let splits: Vec<Split> = Split::ALL
        .into_iter()
        .filter(|s| s == &Split::Train || entries.contains(&format!("{s}_images.npy")))
        .collect();
    let loaded = splits
        .iter()
        .map(|&s| Dataset::from_npz(&bytes, s, None).with_context(|| format!("loading {s} split of {}", path.display())))
        .collect::<Result<Vec<_>>>()?;
    let num_classes = loaded.iter().map(|d| d.num_classes).max().unwrap_or(2);
    let refs: Vec<&Dataset> = loaded.iter().collect();
    let (features, extracted) = ctx.pool.install(|| extract_splits(&refs, &cfg))?;

    let mut samples = BTreeMap::new();
    let mut timing = BTreeMap::new();
    let mut all_seconds = Vec::new();
    for (d, e) in loaded.iter().zip(&extracted) {
        let name = d.split.as_str();
        ctx.out.write(&format!("{name}_features.csv"), e.table.to_csv().as_bytes())?;
        ctx.out.write(&format!("{name}_features.bin"), &e.table.to_bytes())?;
        samples.insert(name.to_string(), d.len());
        timing.insert(name.to_string(), Timing::of(&e.seconds));
        all_seconds.extend_from_slice(&e.seconds);
    }
    let meta = FeatureMeta {
        dataset: path.clone(),
        sample_dims: loaded[0].volumes[0].dims().to_vec(),
        num_classes,
        dim: features.dim(),
        pipeline: cfg,
        features,
        samples,
    };
    ctx.out.write_json(META_FILE, &meta)?;
    let report = TimingReport {
        overall: Timing::of(&all_seconds),
        splits: timing,
        threads: ctx.pool.current_num_threads(),
        note: "wall clock per sample on this machine; reference figures were measured on other hardware",
    };
    ctx.out.write_json("timing.json", &report)?;
    println!(
        "extracted {} samples x {} features; per sample mean {:.4} s, p95 {:.4} s ({} threads)",
        all_seconds.len(),
        meta.dim,
        report.overall.mean_seconds,
        report.overall.p95_seconds,
        report.threads
    );
    Ok(ExitCode::SUCCESS)
}

fn load_table(dir: &Path, split: &str) -> Result<FeatureTable> {
    let path = dir.join(format!("{split}_features.bin"));
    let bytes = read(&path)?;
    FeatureTable::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn load_meta(dir: &Path) -> Result<Option<FeatureMeta>> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let bytes = read(&path)?;
    Ok(Some(serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?))
}

fn matrix(t: &FeatureTable) -> Array2<f64> {
    Array2::from_shape_vec((t.len(), t.dim), t.rows.concat()).expect("table rows have dim entries")
}

fn check_dim(t: &FeatureTable, expected: usize, what: &str) -> Result<()> {
    if t.dim != expected {
        bail!(Error::Format(format!("{what} has {} columns, expected {expected}", t.dim)));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    val_auc: f64,
    val_acc: f64,
    best_epoch: usize,
    epochs_run: usize,
    num_classes: usize,
    config: TrainConfig,
}

pub fn train(features: Option<PathBuf>, args: TrainArgs, common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let dir = features
        .or_else(|| ctx.file.features.clone())
        .unwrap_or_else(|| ctx.out.path(""));
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: pick(args.learning_rate, ctx.file.learning_rate, d.learning_rate),
        epochs: pick(args.epochs, ctx.file.epochs, d.epochs),
        batch_size: pick(args.batch_size, ctx.file.batch_size, d.batch_size),
        patience: pick(args.patience, ctx.file.patience, d.patience),
        seed: ctx.seed,
        ..d
    };
    cfg.validate()?;
    let train_t = load_table(&dir, "train")?;
    let val_t = load_table(&dir, "val")?;
    let meta = load_meta(&dir)?;
    let dim = meta.as_ref().map_or(train_t.dim, |m| m.dim);
    check_dim(&train_t, dim, "train features")?;
    check_dim(&val_t, dim, "val features")?;
    let num_classes = meta.as_ref().map(|m| m.num_classes).unwrap_or_else(|| {
        train_t
            .labels
            .iter()
            .chain(&val_t.labels)
            .max()
            .map_or(2, |m| (m + 1).max(2))
    });
    let (xt, xv) = (matrix(&train_t), matrix(&val_t));
    let (model, history) = ctx.pool.install(|| {
        fit_classifier(
            Samples::new(xt.view(), &train_t.labels)?,
            Samples::new(xv.view(), &val_t.labels)?,
            num_classes,
            &cfg,
        )
    })?;
    let metrics = evaluate(&model, Samples::new(xv.view(), &val_t.labels)?)?;
    ctx.out.write(MODEL_FILE, &encode_model(&model))?;
    ctx.out.write("history.csv", history.to_csv().as_bytes())?;
    ctx.out.write_json(
        "train_metrics.json",
        &TrainSummary {
            val_auc: metrics.auc,
            val_acc: metrics.acc,
            best_epoch: history.best_epoch,
            epochs_run: history.epochs.len(),
            num_classes,
            config: cfg,
        },
    )?;
    println!(
        "val AUC {:.4} ACC {:.4} (best epoch {} of {})",
        metrics.auc,
        metrics.acc,
        history.best_epoch,
        history.epochs.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn eval(checkpoint: Option<PathBuf>, features: Option<PathBuf>, split: Option<String>, common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let checkpoint = checkpoint
        .or_else(|| ctx.file.checkpoint.clone())
        .unwrap_or_else(|| ctx.out.path(MODEL_FILE));
    let dir = features
        .or_else(|| ctx.file.features.clone())
        .unwrap_or_else(|| ctx.out.path(""));
    let split = pick(split, ctx.file.split.clone(), "test".to_string());
    let model = decode_model(&read(&checkpoint)?).with_context(|| format!("decoding {}", checkpoint.display()))?;
    let table = load_table(&dir, &split)?;
    check_dim(&table, model.input_dim(), &format!("{split} features"))?;
    let k = model.num_classes();
    if let Some(bad) = table.labels.iter().find(|&&l| l >= k) {
        bail!(Error::Format(format!("label {bad} in {split} features, model has {k} classes")));
    }
    let x = matrix(&table);
    let metrics = evaluate(&model, Samples::new(x.view(), &table.labels)?)?;
    ctx.out.write_json("metrics.json", &metrics)?;
    println!("{:<8} {:>8} {:>8}", "split", "AUC", "ACC");
    println!("{:<8} {:>8.4} {:>8.4}", split, metrics.auc, metrics.acc);
    Ok(ExitCode::SUCCESS)
}

pub struct StabilityArgs {
    pub trials: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub sigma_gauss: Option<f64>,
    pub sigma_log: Option<f64>,
    pub noise_eps: Option<f64>,
    pub num_lines: Option<usize>,
    pub bound_scale: f64,
}

pub fn stability(args: StabilityArgs, common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let f = &ctx.file;
    let glog = GlogParams::default();
    let p = StabilityParams {
        num_lines: pick(args.num_lines, f.num_lines, 50),
        bound_scale: args.bound_scale,
        ..StabilityParams::new(
            pick(args.trials, f.trials, 50),
            pick(args.dims, f.dims.clone(), vec![8, 8]),
            pick(args.sigma_gauss, f.sigma_gauss, glog.sigma_gauss),
            pick(args.sigma_log, f.sigma_log, glog.sigma_log),
            pick(args.noise_eps, f.noise_eps, 0.1),
            ctx.seed,
        )
    };
    let report = ctx.pool.install(|| run_stability_suite(&p))?;
    ctx.out.write("stability_report.json", report.to_json().as_bytes())?;
    print!("{}", report.to_table());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn decomposition(common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let report = ctx.pool.install(|| run_decomposition_suite(ctx.seed))?;
    ctx.out.write("decomposition_report.json", report.to_json().as_bytes())?;
    print!("{}", report.to_table());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn synth(sizes: Option<Vec<usize>>, common: Common) -> Result<ExitCode> {
    let ctx = setup(&common)?;
    let sizes = pick(sizes, ctx.file.sizes.clone(), vec![240, 80, 80]);
    let sizes: [usize; 3] = sizes
        .try_into()
        .map_err(|_| Error::Parameter("--sizes takes three numbers".into()))?;
    let splits = shapes_splits(sizes, &ShapeConfig::default(), ctx.seed)?;
    let tensors = splits.iter().map(dataset_tensors).collect::<glog_core::Result<Vec<_>>>()?;
    let names: Vec<(String, String)> = Split::ALL
        .iter()
        .map(|s| (format!("{s}_images"), format!("{s}_labels")))
        .collect();
    let mut entries = Vec::new();
    for ((img, lab), (x, y)) in names.iter().zip(&tensors) {
        entries.push((img.as_str(), x));
        entries.push((lab.as_str(), y));
    }
    let path = ctx.out.write("shapes.npz", &write_npz(&entries))?;
    println!("wrote {} ({} / {} / {} samples)", path.display(), sizes[0], sizes[1], sizes[2]);
    Ok(ExitCode::SUCCESS)
}
