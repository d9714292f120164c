use ndarray::Array2;

use crate::error::{Error, Result};

pub fn accuracy(preds: &[usize], truth: &[usize]) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty set".into()));
    }
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Index of the largest entry in each row (first on ties).
pub fn argmax_rows(scores: &Array2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half (Mann–Whitney U over average ranks).
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative samples".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block i..=j shares the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * idx[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Binary AUC on the class-1 column for K = 2; macro average of one-vs-rest
/// AUCs for K > 2, skipping classes without both positives and negatives.
pub fn auc(scores: &Array2<f64>, truth: &[usize]) -> Result<f64> {
    let k = scores.ncols();
    if k < 2 {
        return Err(Error::Parameter("AUC needs at least two score columns".into()));
    }
    if scores.nrows() != truth.len() {
        return Err(Error::Shape(format!(
            "{} score rows for {} labels",
            scores.nrows(),
            truth.len()
        )));
    }
    if k == 2 {
        let pos: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
        return binary_auc(&scores.column(1).to_vec(), &pos);
    }
    let per_class: Vec<f64> = (0..k)
        .filter_map(|c| {
            let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            binary_auc(&scores.column(c).to_vec(), &pos).ok()
        })
        .collect();
    if per_class.is_empty() {
        return Err(Error::UndefinedMetric("no class has both positives and negatives".into()));
    }
    Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
}
