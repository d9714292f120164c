//! Per-feature standardization fitted on the training split. After
//! training it is folded into the first layer so the saved model consumes
//! raw features.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::mlp::MlpModel;
use crate::error::{Error, Result};

/// Features with a spread below this are centred but not scaled.
const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Parameter("cannot fit scaling on no rows".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > MIN_SCALE { s } else { 1.0 });
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "{} columns, scaling fitted on {}",
                x.ncols(),
                self.mean.len()
            )));
        }
        Ok((&x - &self.mean) / &self.scale)
    }

    /// Model `m'` with `m'(x) = m((x - mean) / scale)`.
    pub fn fold_into(&self, m: &MlpModel) -> Result<MlpModel> {
        if m.input_dim() != self.mean.len() {
            return Err(Error::Shape(format!(
                "model input {} vs scaling dim {}",
                m.input_dim(),
                self.mean.len()
            )));
        }
        let mut out = m.clone();
        let w = &mut out.weights[0];
        *w /= &self.scale;
        out.biases[0] = &m.biases[0] - &w.dot(&self.mean);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::mlp::init_model;
    use ndarray::array;

    #[test]
    fn standardized_columns() {
        let x = array![[1.0, 5.0, 2.0], [3.0, 5.0, 4.0], [5.0, 5.0, 9.0]];
        let s = Standardizer::fit(x.view()).unwrap();
        let z = s.apply(x.view()).unwrap();
        for j in 0..3 {
            assert!(z.column(j).mean().unwrap().abs() < 1e-12);
        }
        assert!((z.column(0).std(0.0) - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn folding_matches_explicit_scaling() {
        let x = array![[0.1, 0.02, 0.0], [0.3, 0.01, 0.0], [0.2, 0.05, 0.7]];
        let m = init_model(&[3, 6, 2], 4).unwrap();
        let s = Standardizer::fit(x.view()).unwrap();
        let folded = s.fold_into(&m).unwrap();
        let a = m.predict_proba(s.apply(x.view()).unwrap().view()).unwrap();
        let b = folded.predict_proba(x.view()).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
