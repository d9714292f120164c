//! Volumes to labelled feature tables: G-LoG fields, a box shared by the
//! dataset, fibered barcodes and persistence images.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifiltration::{BiGradedField, BoundingBox, GlogOperator, GlogParams};
use crate::error::{Error, Result};
use crate::vectorize::{feature_vector, global_box, FeatureConfig, FeatureTable, MpiConfig};
use crate::volume_io::{Dataset, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub glog: GlogParams,
    pub num_lines: usize,
    pub bandwidth: f64,
    pub weight_power: f64,
    pub resolution: (usize, usize),
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            glog: GlogParams::default(),
            num_lines: 50,
            bandwidth: 0.01,
            weight_power: 2.0,
            resolution: (50, 50),
        }
    }
}

impl PipelineConfig {
    /// Feature settings for `n`-dimensional data over `bbox`.
    pub fn features(&self, n: usize, bbox: BoundingBox) -> FeatureConfig {
        FeatureConfig {
            num_lines: self.num_lines,
            degrees: (0..n).collect(),
            mpi: MpiConfig {
                resolution: self.resolution,
                bandwidth: self.bandwidth,
                weight_power: self.weight_power,
                bbox,
            },
        }
    }
}

/// G-LoG fields of `volumes` together with the seconds spent on each.
pub fn glog_fields(volumes: &[Volume], glog: GlogParams) -> Result<(Vec<BiGradedField>, Vec<f64>)> {
    let n = volumes
        .first()
        .ok_or_else(|| Error::Parameter("no volumes".into()))?
        .ndim();
    let op = GlogOperator::new(glog, n)?;
    let timed = volumes
        .par_iter()
        .map(|v| {
            let start = Instant::now();
            let f = op.apply(v)?;
            Ok((f, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(timed.into_iter().unzip())
}

/// Feature table plus per-sample wall-clock seconds (fields and features).
#[derive(Debug, Clone)]
pub struct Extracted {
    pub table: FeatureTable,
    pub seconds: Vec<f64>,
}

pub fn feature_table(
    fields: &[BiGradedField],
    labels: &[usize],
    cfg: &FeatureConfig,
) -> Result<(FeatureTable, Vec<f64>)> {
    let timed = fields
        .par_iter()
        .map(|f| {
            let start = Instant::now();
            let fv = feature_vector(f, cfg)?;
            Ok((fv.values, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, seconds): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
    Ok((FeatureTable::new(cfg.dim(), labels.to_vec(), rows)?, seconds))
}

/// Extract every split with the box fixed by the first (training) split.
/// Returns the feature settings used and one result per split.
pub fn extract_splits(splits: &[&Dataset], cfg: &PipelineConfig) -> Result<(FeatureConfig, Vec<Extracted>)> {
    let train = splits
        .first()
        .ok_or_else(|| Error::Parameter("no splits given".into()))?;
    let n = train.volumes[0].ndim();
    let mut fields = Vec::with_capacity(splits.len());
    for d in splits {
        if d.volumes[0].ndim() != n {
            return Err(Error::Shape("splits differ in dimension".into()));
        }
        fields.push(glog_fields(&d.volumes, cfg.glog)?);
    }
    let features = cfg.features(n, global_box(&fields[0].0)?);
    let mut out = Vec::with_capacity(splits.len());
    for (d, (f, glog_seconds)) in splits.iter().zip(&fields) {
        let (table, seconds) = feature_table(f, &d.labels, &features)?;
        let seconds = seconds.iter().zip(glog_seconds).map(|(a, b)| a + b).collect();
        out.push(Extracted { table, seconds });
    }
    Ok((features, out))
}

/// Mean and 95th percentile (nearest rank) of per-sample timings.
pub fn timing_summary(seconds: &[f64]) -> (f64, f64) {
    if seconds.is_empty() {
        return (0.0, 0.0);
    }
    let mut s = seconds.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((0.95 * s.len() as f64).ceil() as usize).clamp(1, s.len());
    (s.iter().sum::<f64>() / s.len() as f64, s[rank - 1])
}
