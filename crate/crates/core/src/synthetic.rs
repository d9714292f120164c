//! Seeded synthetic images: filled disks (class 0) against annuli (class 1).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume_io::{Dataset, Split, Tensor, TensorData, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    pub side: usize,
    /// Half-width of the uniform pixel noise.
    pub noise: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Inner radius of an annulus as a fraction of the outer one.
    pub hole_fraction: (f64, f64),
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            side: 28,
            noise: 0.05,
            min_radius: 6.0,
            max_radius: 10.0,
            hole_fraction: (0.4, 0.65),
        }
    }
}

/// One image with intensity in `[0, 1]`: a bright shape on a dark
/// background plus clamped uniform noise.
pub fn shape_image(rng: &mut ChaCha8Rng, cfg: &ShapeConfig, annulus: bool) -> Result<Volume> {
    if cfg.side < 8 || !(cfg.noise >= 0.0) || !(0.0 < cfg.min_radius && cfg.min_radius <= cfg.max_radius) {
        return Err(Error::Parameter(format!("invalid shape config {cfg:?}")));
    }
    let side = cfg.side as f64;
    let outer = rng.random_range(cfg.min_radius..=cfg.max_radius).min(side / 2.0 - 1.0);
    let inner = outer * rng.random_range(cfg.hole_fraction.0..=cfg.hole_fraction.1);
    let margin = outer + 0.5;
    let cx = rng.random_range(margin..=(side - 1.0 - margin).max(margin));
    let cy = rng.random_range(margin..=(side - 1.0 - margin).max(margin));
    let brightness = rng.random_range(0.7..=1.0);
    let mut data = Vec::with_capacity(cfg.side * cfg.side);
    for r in 0..cfg.side {
        for c in 0..cfg.side {
            let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
            let inside = d <= outer && (!annulus || d >= inner);
            let base = if inside { brightness } else { 0.0 };
            let noise = if cfg.noise > 0.0 {
                rng.random_range(-cfg.noise..=cfg.noise)
            } else {
                0.0
            };
            data.push((base + noise).clamp(0.0, 1.0));
        }
    }
    Volume::new(vec![cfg.side, cfg.side], data)
}

/// `n` images with alternating labels 0 (disk), 1 (annulus).
pub fn shapes_dataset(n: usize, split: Split, cfg: &ShapeConfig, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let volumes = labels
        .iter()
        .map(|&l| shape_image(&mut rng, cfg, l == 1))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(volumes, labels, split, 2)
}

/// Train/val/test splits with disjoint seeds.
pub fn shapes_splits(sizes: [usize; 3], cfg: &ShapeConfig, seed: u64) -> Result<[Dataset; 3]> {
    let make = |i: usize| shapes_dataset(sizes[i], Split::ALL[i], cfg, seed.wrapping_mul(3).wrapping_add(i as u64));
    Ok([make(0)?, make(1)?, make(2)?])
}

/// Images quantized to `u8` and labels as an `(N, 1)` array, the layout
/// of MedMNIST archives.
pub fn dataset_tensors(d: &Dataset) -> Result<(Tensor, Tensor)> {
    let mut dims = vec![d.len()];
    dims.extend_from_slice(d.volumes[0].dims());
    let pixels = d
        .volumes
        .iter()
        .flat_map(|v| v.data().iter().map(|x| (x * 255.0).round() as u8))
        .collect();
    let labels = d.labels.iter().map(|&l| l as u8).collect();
    Ok((
        Tensor::new(dims, TensorData::U8(pixels))?,
        Tensor::new(vec![d.len(), 1], TensorData::U8(labels))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_are_seeded_and_bounded() {
        let cfg = ShapeConfig::default();
        let a = shapes_dataset(6, Split::Train, &cfg, 1).unwrap();
        let b = shapes_dataset(6, Split::Train, &cfg, 1).unwrap();
        assert_eq!(a.labels, vec![0, 1, 0, 1, 0, 1]);
        for (x, y) in a.volumes.iter().zip(&b.volumes) {
            assert_eq!(x, y);
            assert!(x.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn annulus_has_dark_centre_disk_does_not() {
        let cfg = ShapeConfig { noise: 0.0, ..ShapeConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let disk = shape_image(&mut rng, &cfg, false).unwrap();
        let ring = shape_image(&mut rng, &cfg, true).unwrap();
        let bright = |v: &Volume| v.data().iter().filter(|&&x| x > 0.5).count();
        assert!(bright(&disk) > 0 && bright(&ring) > 0);
        let dark_inside = |v: &Volume| {
            let s = 28;
            let d = v.data();
            (1..s - 1).any(|r| {
                (1..s - 1).any(|c| {
                    d[r * s + c] < 0.5
                        && (0..c).any(|k| d[r * s + k] > 0.5)
                        && (c + 1..s).any(|k| d[r * s + k] > 0.5)
                        && (0..r).any(|k| d[k * s + c] > 0.5)
                        && (r + 1..s).any(|k| d[k * s + c] > 0.5)
                })
            })
        };
        assert!(dark_inside(&ring));
        assert!(!dark_inside(&disk));
    }

    #[test]
    fn tensors_round_trip_through_archive() {
        let d = shapes_dataset(4, Split::Val, &ShapeConfig::default(), 3).unwrap();
        let (x, y) = dataset_tensors(&d).unwrap();
        let zip = crate::volume_io::write_npz(&[("val_images", &x), ("val_labels", &y)]);
        let back = Dataset::from_npz(&zip, Split::Val, Some(2)).unwrap();
        assert_eq!(back.labels, d.labels);
        assert!(back.volumes[0].max_abs_diff(&d.volumes[0]).unwrap() <= 0.5 / 255.0 + 1e-12);
    }
}
