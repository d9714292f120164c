//! Loading grayscale images and volumes: NPY/NPZ/PGM containers, color
//! collapse and intensity normalization.

mod npy;
mod npz;
mod pgm;

pub use npy::{read_npy, write_npy, DType, Tensor, TensorData};
pub use npz::{list_npz_entries, read_npz, write_npz};
pub use pgm::read_pgm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2D or 3D grid of scalar values stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(Error::Shape(format!(
                "volumes are 2D or 3D, got dims {dims:?}"
            )));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Shape(format!("every dim must be >= 2, got {dims:?}")));
        }
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {count} values, got {}",
                data.len()
            )));
        }
        Ok(Volume { dims, data })
    }

    pub fn filled(dims: Vec<usize>, value: f64) -> Result<Self> {
        let count = dims.iter().product();
        Volume::new(dims, vec![value; count])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Ambient dimension n.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs_diff(&self, other: &Volume) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Map raw [0,255] intensities to [0,1].
pub fn normalize(v: &Volume) -> Result<Volume> {
    if let Some(bad) = v
        .data
        .iter()
        .find(|x| !(0.0..=255.0).contains(*x))
    {
        return Err(Error::Domain(format!("raw intensity {bad} outside [0,255]")));
    }
    Volume::new(v.dims.clone(), v.data.iter().map(|x| x / 255.0).collect())
}

/// Collapse a trailing RGB axis with BT.601 luminance weights, rounding to
/// the nearest integer level.
pub fn grayscale_convert(rgb: &Tensor) -> Result<Volume> {
    let (&channels, spatial) = rgb
        .dims
        .split_last()
        .ok_or_else(|| Error::Shape("scalar tensor has no channel axis".into()))?;
    if channels != 3 {
        return Err(Error::Shape(format!(
            "expected trailing channel dim 3, got {channels}"
        )));
    }
    let values = rgb.data.to_f64();
    let gray = values
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).round())
        .collect();
    Volume::new(spatial.to_vec(), gray)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labelled volumes of one split, all sharing the same dims.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub volumes: Vec<Volume>,
    pub labels: Vec<usize>,
    pub split: Split,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(
        volumes: Vec<Volume>,
        labels: Vec<usize>,
        split: Split,
        num_classes: usize,
    ) -> Result<Self> {
        if volumes.is_empty() {
            return Err(Error::Parameter(format!("{split} split is empty")));
        }
        if volumes.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} volumes but {} labels",
                volumes.len(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let dims = volumes[0].dims();
        if volumes.iter().any(|v| v.dims() != dims) {
            return Err(Error::Shape("volumes in a split must share dims".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Domain(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        Ok(Dataset {
            volumes,
            labels,
            split,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Load `{split}_images` / `{split}_labels` from a MedMNIST-style archive,
    /// collapsing color channels and normalizing to [0,1].
    ///
    /// `num_classes` of `None` infers K from the largest label in this split.
    pub fn from_npz(bytes: &[u8], split: Split, num_classes: Option<usize>) -> Result<Self> {
        let images = read_npz(bytes, &format!("{split}_images"))?;
        let labels = read_npz(bytes, &format!("{split}_labels"))?;
        let volumes = split_images(&images)?;
        let labels = squeeze_labels(&labels, volumes.len())?;
        let k = num_classes.unwrap_or_else(|| labels.iter().max().map_or(2, |m| (m + 1).max(2)));
        Dataset::new(volumes, labels, split, k)
    }
}

/// Split an (N, ...) image stack into normalized volumes. A trailing axis of
/// length 3 on a rank-4 stack is treated as RGB.
pub fn split_images(images: &Tensor) -> Result<Vec<Volume>> {
    let (&n, sample_dims) = images
        .dims
        .split_first()
        .ok_or_else(|| Error::Shape("image stack has no sample axis".into()))?;
    let is_rgb = images.dims.len() == 4 && images.dims[3] == 3;
    let per: usize = sample_dims.iter().product();
    let values = images.data.to_f64();
    let mut out = Vec::with_capacity(n);
    for chunk in values.chunks_exact(per.max(1)).take(n) {
        let raw = if is_rgb {
            let t = Tensor::new(sample_dims.to_vec(), TensorData::F64(chunk.to_vec()))?;
            grayscale_convert(&t)?
        } else {
            Volume::new(sample_dims.to_vec(), chunk.to_vec())?
        };
        out.push(normalize(&raw)?);
    }
    Ok(out)
}

/// Labels are the last axis of the labels array after squeezing trailing
/// singleton dims; multi-label rows are rejected.
pub fn squeeze_labels(labels: &Tensor, expected: usize) -> Result<Vec<usize>> {
    let mut dims = labels.dims.clone();
    while dims.len() > 1 && dims.last() == Some(&1) {
        dims.pop();
    }
    if dims.len() != 1 {
        return Err(Error::Unsupported(format!(
            "label array of shape {:?} (multi-label tasks are not supported)",
            labels.dims
        )));
    }
    if dims[0] != expected {
        return Err(Error::Shape(format!(
            "{} labels for {expected} images",
            dims[0]
        )));
    }
    labels
        .data
        .to_f64()
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Domain(format!("label {x} is not a class index")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        let v = Volume::new(vec![3, 2], vec![0.0, 255.0, 128.0, 0.0, 0.0, 0.0]).unwrap();
        let n = normalize(&v).unwrap();
        assert_eq!(&n.data()[..3], &[0.0, 1.0, 128.0 / 255.0]);
        let zero = Volume::filled(vec![4, 4], 0.0).unwrap();
        assert_eq!(normalize(&zero).unwrap(), zero);
        let bad = Volume::new(vec![2, 2], vec![0.0, 256.0, 0.0, 0.0]).unwrap();
        assert!(matches!(normalize(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn luminance_examples() {
        let t = Tensor::new(
            vec![2, 2, 3],
            TensorData::U8(vec![255, 255, 255, 0, 0, 0, 255, 0, 0, 0, 255, 0]),
        )
        .unwrap();
        let g = grayscale_convert(&t).unwrap();
        assert_eq!(g.dims(), &[2, 2]);
        // 0.299 * 255 = 76.245, 0.587 * 255 = 149.685
        assert_eq!(g.data(), &[255.0, 0.0, 76.0, 150.0]);
        let wrong = Tensor::new(vec![2, 2, 4], TensorData::U8(vec![0; 16])).unwrap();
        assert!(matches!(grayscale_convert(&wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn volume_shape_invariants() {
        assert!(Volume::new(vec![4], vec![0.0; 4]).is_err());
        assert!(Volume::new(vec![1, 4], vec![0.0; 4]).is_err());
        assert!(Volume::new(vec![2, 2, 2, 2], vec![0.0; 16]).is_err());
        assert!(Volume::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn dataset_validation() {
        let v = Volume::filled(vec![2, 2], 0.0).unwrap();
        assert!(Dataset::new(vec![], vec![], Split::Train, 2).is_err());
        assert!(Dataset::new(vec![v.clone()], vec![2], Split::Train, 2).is_err());
        let w = Volume::filled(vec![3, 2], 0.0).unwrap();
        assert!(Dataset::new(vec![v.clone(), w], vec![0, 1], Split::Train, 2).is_err());
        assert!(Dataset::new(vec![v], vec![1], Split::Val, 2).is_ok());
    }

    #[test]
    fn labels_squeeze_trailing_singletons() {
        let t = Tensor::new(vec![3, 1], TensorData::U8(vec![0, 2, 1])).unwrap();
        assert_eq!(squeeze_labels(&t, 3).unwrap(), vec![0, 2, 1]);
        let multi = Tensor::new(vec![3, 2], TensorData::U8(vec![0; 6])).unwrap();
        assert!(matches!(squeeze_labels(&multi, 3), Err(Error::Unsupported(_))));
    }

    proptest! {
        #[test]
        fn normalize_preserves_order(a in 0.0f64..=255.0, b in 0.0f64..=255.0) {
            let v = Volume::new(vec![2, 2], vec![a, b, 0.0, 0.0]).unwrap();
            let n = normalize(&v).unwrap();
            prop_assert_eq!(a <= b, n.data()[0] <= n.data()[1]);
        }

        #[test]
        fn gray_lies_between_channels(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let t = Tensor::new(vec![2, 2, 3], TensorData::U8([r, g, b].repeat(4))).unwrap();
            let y = grayscale_convert(&t).unwrap().data()[0];
            let lo = f64::from(r.min(g).min(b));
            let hi = f64::from(r.max(g).max(b));
            prop_assert!(lo <= y && y <= hi);
        }
    }
}
