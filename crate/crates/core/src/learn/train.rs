use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::auc;
use super::metrics::{accuracy, argmax_rows};
use super::mlp::{classifier_widths, init_model, loss_and_gradients, Gradients, MlpModel};
use super::scaling::Standardizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 32,
            patience: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0)
            || self.epochs == 0
            || self.batch_size == 0
            || self.patience == 0
            || self.patience > self.epochs
        {
            return Err(Error::Parameter(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Rows of `x` with their class labels.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [usize],
}

impl<'a> Samples<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [usize]) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), y.len())));
        }
        if y.is_empty() {
            return Err(Error::Parameter("empty split".into()));
        }
        Ok(Samples { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_auc: f64,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_auc\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_auc));
        }
        out
    }
}

struct Adam {
    cfg: TrainConfig,
    step: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(model: &MlpModel, cfg: TrainConfig) -> Self {
        Adam {
            cfg,
            step: 0,
            m_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            v_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    fn update(&mut self, model: &mut MlpModel, g: &Gradients) {
        self.step += 1;
        let TrainConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
            ..
        } = self.cfg;
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let apply = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..model.weights.len() {
            ndarray::Zip::from(&mut model.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&g.weights[l])
                .for_each(|p, m, v, &g| apply(p, m, v, g));
            ndarray::Zip::from(&mut model.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&g.biases[l])
                .for_each(|p, m, v, &g| apply(p, m, v, g));
        }
    }
}

fn cross_entropy(proba: &Array2<f64>, y: &[usize]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, &c)| -proba[[i, c]].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / y.len() as f64
}

/// Mini-batch Adam on cross-entropy. After every epoch the validation AUC
/// is measured and the best snapshot is kept, ties on AUC going to the lower
/// validation loss. Training stops once `patience` epochs pass without a
/// strict AUC improvement.
pub fn train(
    model: MlpModel,
    train_set: Samples<'_>,
    val_set: Samples<'_>,
    cfg: &TrainConfig,
) -> Result<(MlpModel, History)> {
    cfg.validate()?;
    if train_set.x.ncols() != model.input_dim() || val_set.x.ncols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "feature dim {} / {} vs model input {}",
            train_set.x.ncols(),
            val_set.x.ncols(),
            model.input_dim()
        )));
    }

    let mut model = model;
    let mut adam = Adam::new(&model, *cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.y.len()).collect();
    let mut best = model.clone();
    let mut history = History {
        best_val_auc: f64::NEG_INFINITY,
        ..History::default()
    };
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = train_set.x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train_set.y[i]).collect();
            let (loss, grads) = loss_and_gradients(&model, xb.view(), &yb)?;
            total += loss * batch.len() as f64;
            adam.update(&mut model, &grads);
        }
        let proba = model.predict_proba(val_set.x)?;
        let val_auc = auc(&proba, val_set.y)?;
        let val_loss = cross_entropy(&proba, val_set.y);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: total / order.len() as f64,
            val_auc,
            val_loss,
        });
        let improved = val_auc > history.best_val_auc;
        if improved || (val_auc == history.best_val_auc && val_loss < best_loss) {
            history.best_val_auc = val_auc;
            history.best_epoch = epoch;
            best_loss = val_loss;
            best = model.clone();
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, history))
}

/// Standardize on the training rows, train a fresh `[D, 256, 128, 64, K]`
/// network seeded by `cfg.seed`, and fold the scaling into the result.
pub fn fit_classifier(
    train_set: Samples<'_>,
    val_set: Samples<'_>,
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<(MlpModel, History)> {
    if let Some(bad) = train_set.y.iter().chain(val_set.y).find(|&&c| c >= num_classes) {
        return Err(Error::Domain(format!("label {bad} outside [0, {num_classes})")));
    }
    let scaler = Standardizer::fit(train_set.x)?;
    let xt = scaler.apply(train_set.x)?;
    let xv = scaler.apply(val_set.x)?;
    let model = init_model(&classifier_widths(train_set.x.ncols(), num_classes), cfg.seed)?;
    let (best, history) = train(
        model,
        Samples::new(xt.view(), train_set.y)?,
        Samples::new(xv.view(), val_set.y)?,
        cfg,
    )?;
    Ok((scaler.fold_into(&best)?, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub acc: f64,
}

pub fn evaluate(model: &MlpModel, set: Samples<'_>) -> Result<Metrics> {
    let proba = model.predict_proba(set.x)?;
    Ok(Metrics {
        auc: auc(&proba, set.y)?,
        acc: accuracy(&argmax_rows(&proba), set.y)?,
    })
}
