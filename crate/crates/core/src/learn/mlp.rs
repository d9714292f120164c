use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hidden layer widths of the classifier.
pub const HIDDEN_WIDTHS: [usize; 3] = [256, 128, 64];

/// Fully connected network: ReLU on hidden layers, softmax on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// `weights[i]` is `widths[i+1] × widths[i]`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// `[input_dim, 256, 128, 64, num_classes]`.
pub fn classifier_widths(input_dim: usize, num_classes: usize) -> Vec<usize> {
    let mut w = vec![input_dim];
    w.extend(HIDDEN_WIDTHS);
    w.push(num_classes);
    w
}

/// Weights uniform in `±sqrt(6 / fan_in)`, zero biases.
pub fn init_model(widths: &[usize], seed: u64) -> Result<MlpModel> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::Parameter(format!("invalid layer widths {widths:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(widths.len() - 1);
    let mut biases = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / fan_in as f64).sqrt();
        weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || {
            rng.random_range(-bound..bound)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpModel { weights, biases })
}

impl MlpModel {
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.weights[0].ncols()];
        w.extend(self.weights.iter().map(|m| m.nrows()));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.last().map_or(0, |m| m.nrows())
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_input(&self, d: usize) -> Result<()> {
        if d != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of length {d}, model expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer for a batch (rows are samples).
    fn logits_trace(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut trace: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len());
        let mut act = x.to_owned();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = act.dot(&w.t()) + b;
            if i + 1 < self.weights.len() {
                act = z.mapv(|v| v.max(0.0));
            }
            trace.push(z);
        }
        trace
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut z = self.logits_trace(x).pop().expect("model has layers");
        softmax_rows(&mut z);
        Ok(z)
    }
}

pub fn forward(m: &MlpModel, x: &[f64]) -> Result<Vec<f64>> {
    m.check_input(x.len())?;
    let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous row");
    Ok(m.predict_proba(view)?.row(0).to_vec())
}

/// In-place row softmax with the row max subtracted first.
pub fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Mean cross-entropy of the batch and its gradient.
pub fn loss_and_gradients(m: &MlpModel, x: ArrayView2<f64>, y: &[usize]) -> Result<(f64, Gradients)> {
    m.check_input(x.ncols())?;
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), y.len())));
    }
    let k = m.num_classes();
    if let Some(bad) = y.iter().find(|&&c| c >= k) {
        return Err(Error::Domain(format!("label {bad} for a {k}-class model")));
    }
    let n = y.len() as f64;
    let trace = m.logits_trace(x);
    let logits = trace.last().unwrap();

    let mut loss = 0.0;
    let mut delta = logits.clone();
    softmax_rows(&mut delta);
    for (i, row) in logits.rows().into_iter().enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.mapv(|v| (v - max).exp()).sum().ln();
        loss += lse - row[y[i]];
        delta[[i, y[i]]] -= 1.0;
    }
    delta /= n;

    let layers = m.weights.len();
    let mut gw = vec![Array2::zeros((0, 0)); layers];
    let mut gb = vec![Array1::zeros(0); layers];
    for l in (0..layers).rev() {
        let input = if l == 0 {
            x.to_owned()
        } else {
            trace[l - 1].mapv(|v| v.max(0.0))
        };
        gw[l] = delta.t().dot(&input);
        gb[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut back = delta.dot(&m.weights[l]);
            back.zip_mut_with(&trace[l - 1], |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
            delta = back;
        }
    }
    Ok((loss / n, Gradients { weights: gw, biases: gb }))
}

/// Mean cross-entropy only.
pub fn loss(m: &MlpModel, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
    let p = m.predict_proba(x)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, &c)| -p[[i, c]].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn same_seed_same_parameters() {
        let w = classifier_widths(20, 3);
        assert_eq!(init_model(&w, 7).unwrap(), init_model(&w, 7).unwrap());
        assert_ne!(init_model(&w, 7).unwrap(), init_model(&w, 8).unwrap());
    }

    #[test]
    fn initial_weights_respect_fan_in_bound() {
        let m = init_model(&classifier_widths(50, 4), 1).unwrap();
        for w in &m.weights {
            let bound = (6.0 / w.ncols() as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound));
        }
        assert_eq!(m.widths(), vec![50, 256, 128, 64, 4]);
    }

    #[test]
    fn zero_model_is_uniform() {
        let mut m = init_model(&classifier_widths(5, 4), 1).unwrap();
        m.weights.iter_mut().for_each(|w| w.fill(0.0));
        let p = forward(&m, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(matches!(forward(&m, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn softmax_is_stable_and_shift_invariant() {
        let mut z = array![[1000.0, 0.0]];
        softmax_rows(&mut z);
        assert!(z.iter().all(|v| v.is_finite()));
        assert!((z[[0, 0]] - 1.0).abs() < 1e-15 && z[[0, 1]] < 1e-300);
        let mut a = array![[0.3, -1.2, 2.5]];
        let mut b = array![[100.3, 98.8, 102.5]];
        softmax_rows(&mut a);
        softmax_rows(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_traced_loss() {
        let m = init_model(&[3, 4, 2], 3).unwrap();
        let x = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]];
        let (l, _) = loss_and_gradients(&m, x.view(), &[0, 1]).unwrap();
        assert!((l - loss(&m, x.view(), &[0, 1]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = init_model(&classifier_widths(20, 3), 5).unwrap();
        let x = Array2::from_shape_fn((8, 20), |_| rng.random_range(-1.0..1.0));
        let y: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let (_, g) = loss_and_gradients(&m, x.view(), &y).unwrap();
        let h = 1e-5;
        for _ in 0..10 {
            let layer = rng.random_range(0..m.weights.len());
            let (r, c) = m.weights[layer].dim();
            let (i, j) = (rng.random_range(0..r), rng.random_range(0..c));
            let shifted = |d: f64| {
                let mut p = m.clone();
                p.weights[layer][[i, j]] += d;
                loss(&p, x.view(), &y).unwrap()
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            let analytic = g.weights[layer][[i, j]];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-4, "layer {layer} ({i},{j}): {analytic} vs {numeric}");
        }
        let (_, gb) = loss_and_gradients(&m, x.view(), &y).unwrap();
        let mut p = m.clone();
        p.biases[3][1] += h;
        let up = loss(&p, x.view(), &y).unwrap();
        p.biases[3][1] -= 2.0 * h;
        let numeric = (up - loss(&p, x.view(), &y).unwrap()) / (2.0 * h);
        assert!((gb.biases[3][1] - numeric).abs() < 1e-8);
    }

    /// Double-double value `hi + lo`.
    #[derive(Clone, Copy)]
    struct Dd(f64, f64);

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    impl Dd {
        fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.0, o.0);
            let lo = s.1 + self.1 + o.1;
            two_sum(s.0, lo)
        }
        fn mul_f(self, b: f64) -> Dd {
            let p = self.0 * b;
            let e = self.0.mul_add(b, -p);
            two_sum(p, e + self.1 * b)
        }
    }

    /// Forward pass in double-double arithmetic with a softmax evaluated
    /// from the exact logit differences.
    fn forward_dd(m: &MlpModel, x: &[f64]) -> Vec<f64> {
        let mut h: Vec<Dd> = x.iter().map(|&v| Dd(v, 0.0)).collect();
        let last = m.weights.len() - 1;
        for (l, (w, b)) in m.weights.iter().zip(&m.biases).enumerate() {
            h = (0..w.nrows())
                .map(|r| {
                    let z = (0..w.ncols()).fold(Dd(b[r], 0.0), |acc, c| acc.add(h[c].mul_f(w[[r, c]])));
                    if l < last && z.0 < 0.0 { Dd(0.0, 0.0) } else { z }
                })
                .collect();
        }
        let top = h.iter().map(|z| z.0).fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = h.iter().map(|z| ((z.0 - top) + z.1).exp()).collect();
        let total: f64 = e.iter().sum();
        e.iter().map(|v| v / total).collect()
    }

    #[test]
    fn forward_matches_extended_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..5 {
            let m = init_model(&classifier_widths(20, 3), seed).unwrap();
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = forward(&m, &x).unwrap();
            let q = forward_dd(&m, &x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                assert!(*a > 0.0 && *a < 1.0);
            }
        }
    }
}
