//! Multi-parameter persistence images and fixed-length feature vectors.
//!
//! Each bar on line `b` is the segment from `(birth, birth + b)` to
//! `(death, death + b)` in the grade plane. After mapping the box to the
//! unit square, a pixel centred at `c` receives
//!
//! ```text
//! persistence^p * exp(-dist(c, segment)^2 / (2 h^2)) * delta / diagonal
//! ```
//!
//! from every bar, where `h` is the bandwidth, `delta` the line spacing and
//! `diagonal` the length of the box diagonal in grade units.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifiltration::{BiGradedField, BoundingBox};
use crate::error::{Error, Result};
use crate::fibered::{fibered_barcode_in_box, make_line_grid, FiberedBarcode};

/// Contributions farther than this many bandwidths from a segment are cut.
pub const TRUNCATION_BANDWIDTHS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpiConfig {
    /// (rows, cols); rows run along γ², columns along γ¹.
    pub resolution: (usize, usize),
    pub bandwidth: f64,
    pub weight_power: f64,
    pub bbox: BoundingBox,
}

impl MpiConfig {
    pub fn new(bbox: BoundingBox) -> Self {
        MpiConfig {
            resolution: (50, 50),
            bandwidth: 0.01,
            weight_power: 2.0,
            bbox,
        }
    }

    pub fn pixels(&self) -> usize {
        self.resolution.0 * self.resolution.1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(Error::Parameter(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if self.resolution.0 < 1 || self.resolution.1 < 1 {
            return Err(Error::Parameter("resolution must be at least 1x1".into()));
        }
        if !(self.bbox.width1() > 0.0 && self.bbox.width2() > 0.0) {
            return Err(Error::Parameter(format!(
                "degenerate image box {:?}",
                self.bbox
            )));
        }
        Ok(())
    }

    fn to_unit(self, g1: f64, g2: f64) -> (f64, f64) {
        (
            (g1 - self.bbox.min1) / self.bbox.width1(),
            (g2 - self.bbox.min2) / self.bbox.width2(),
        )
    }
}

/// A segment in unit-square coordinates carrying a mass weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSegment {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub weight: f64,
}

pub fn point_segment_distance_sq(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let s = if len_sq > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + s * dx - p.0, a.1 + s * dy - p.1);
    qx * qx + qy * qy
}

/// Rasterize Gaussian-blurred segments onto the `cfg` pixel grid,
/// row-major, segments accumulated in input order.
pub fn render_segments(segments: &[WeightedSegment], cfg: &MpiConfig) -> Vec<f64> {
    let (rows, cols) = cfg.resolution;
    let h = cfg.bandwidth;
    let reach = TRUNCATION_BANDWIDTHS * h;
    let inv = 1.0 / (2.0 * h * h);
    let mut image = vec![0.0; rows * cols];
    for seg in segments {
        let (xlo, xhi) = (seg.start.0.min(seg.end.0) - reach, seg.start.0.max(seg.end.0) + reach);
        let (ylo, yhi) = (seg.start.1.min(seg.end.1) - reach, seg.start.1.max(seg.end.1) + reach);
        let col_range = pixel_range(xlo, xhi, cols);
        let row_range = pixel_range(ylo, yhi, rows);
        for r in row_range {
            let y = (r as f64 + 0.5) / rows as f64;
            for c in col_range.clone() {
                let x = (c as f64 + 0.5) / cols as f64;
                let d2 = point_segment_distance_sq((x, y), seg.start, seg.end);
                if d2 <= reach * reach {
                    image[r * cols + c] += seg.weight * (-d2 * inv).exp();
                }
            }
        }
    }
    image
}

/// Pixel indices whose centres may fall in `[lo, hi]`.
fn pixel_range(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    let first = ((lo * n as f64 - 0.5).floor().max(0.0)) as usize;
    let last = ((hi * n as f64 - 0.5).ceil() + 1.0).clamp(0.0, n as f64) as usize;
    first.min(n)..last
}

/// Segments for all bars of one degree.
pub fn segments_for_degree(fb: &FiberedBarcode, degree: usize, cfg: &MpiConfig) -> Vec<WeightedSegment> {
    let scale = fb.grid.delta / cfg.bbox.diagonal();
    fb.barcodes
        .iter()
        .flat_map(|line| {
            line.bars
                .iter()
                .filter(move |b| b.degree == degree)
                .map(move |b| WeightedSegment {
                    start: cfg.to_unit(b.birth, b.birth + line.offset),
                    end: cfg.to_unit(b.death, b.death + line.offset),
                    weight: b.persistence().powf(cfg.weight_power) * scale,
                })
        })
        .collect()
}

/// Persistence image of one degree, row-major `rows × cols`.
pub fn render_mpi(fb: &FiberedBarcode, degree: usize, cfg: &MpiConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !fb.degrees_present.contains(&degree) {
        return Err(Error::Parameter(format!(
            "degree {degree} absent from fibered barcode (have {:?})",
            fb.degrees_present
        )));
    }
    Ok(render_segments(&segments_for_degree(fb, degree, cfg), cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// (degree, block length) in concatenation order.
    pub layout: Vec<(usize, usize)>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Everything needed to turn a bi-graded field into a feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub num_lines: usize,
    pub degrees: Vec<usize>,
    pub mpi: MpiConfig,
}

impl FeatureConfig {
    /// 50 lines, degrees `0..n`, default image settings over `bbox`.
    pub fn new(n: usize, bbox: BoundingBox) -> Self {
        FeatureConfig {
            num_lines: 50,
            degrees: (0..n).collect(),
            mpi: MpiConfig::new(bbox),
        }
    }

    pub fn dim(&self) -> usize {
        self.degrees.len() * self.mpi.pixels()
    }
}

/// Union of the boxes of the training fields.
pub fn global_box(train: &[BiGradedField]) -> Result<BoundingBox> {
    let (first, rest) = train
        .split_first()
        .ok_or_else(|| Error::Parameter("training split is empty".into()))?;
    Ok(rest
        .iter()
        .fold(first.bbox(), |acc, f| acc.union(&f.bbox()))
        .widened(crate::fibered::DEGENERATE_WIDENING))
}

pub fn feature_vector(f: &BiGradedField, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.mpi.validate()?;
    let mut degrees = cfg.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let grid = make_line_grid(cfg.mpi.bbox, cfg.num_lines)?;
    let fb = fibered_barcode_in_box(f, &grid, &degrees)?;
    let mut values = Vec::with_capacity(degrees.len() * cfg.mpi.pixels());
    let mut layout = Vec::with_capacity(degrees.len());
    for &k in &degrees {
        let image = render_mpi(&fb, k, &cfg.mpi)?;
        layout.push((k, image.len()));
        values.extend(image);
    }
    Ok(FeatureVector { values, layout })
}

/// Feature vectors for `fields` under a box fixed beforehand (normally
/// [`global_box`] of the training split). Samples run on the current rayon
/// pool; output order follows input order.
pub fn build_features(fields: &[BiGradedField], cfg: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    fields.par_iter().map(|f| feature_vector(f, cfg)).collect()
}

/// Labelled feature rows, the on-disk unit for training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub dim: usize,
    pub labels: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

const FEATURE_MAGIC: &[u8; 4] = b"GLF1";

impl FeatureTable {
    pub fn new(dim: usize, labels: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Format(format!(
                "row of length {} in a table of dim {dim}",
                r.len()
            )));
        }
        Ok(FeatureTable { dim, labels, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One row per sample: label first, then the features.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (label, row) in self.labels.iter().zip(&self.rows) {
            out.push_str(&label.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut fields = line.split(',');
            let label = fields
                .next()
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Format(format!("line {}: bad label", i + 1)))?;
            let row = fields
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Format(format!("line {}: bad value {s:?}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            labels.push(label);
            rows.push(row);
        }
        let dim = rows.first().map_or(0, Vec::len);
        FeatureTable::new(dim, labels, rows)
    }

    /// `GLF1`, u32 count, u32 dim, count·dim little-endian f64 values, then
    /// count u32 labels.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.len() * (self.dim * 8 + 4));
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for row in &self.rows {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for &l in &self.labels {
            out.extend_from_slice(&(l as u32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != FEATURE_MAGIC {
            return Err(Error::Format("missing GLF1 magic".into()));
        }
        let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + count * dim * 8 + count * 4;
        if bytes.len() != expected {
            return Err(Error::Length {
                expected,
                found: bytes.len(),
            });
        }
        let values = &bytes[12..12 + count * dim * 8];
        let rows = values
            .chunks_exact((dim * 8).max(1))
            .take(count)
            .map(|row| {
                row.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            })
            .collect();
        let labels = bytes[12 + count * dim * 8..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        FeatureTable::new(dim, labels, rows)
    }
}
