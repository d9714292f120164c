//! Fibered barcodes: one-parameter barcodes of the bi-filtration restricted
//! to an evenly spaced family of slope-one lines.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bifiltration::{slice_scalar_field, BiGradedField, BoundingBox, Line};
use crate::cubical::{compute_persistence, Bar, CubicalComplex, CubicalTopology};
use crate::error::{Error, Result};

/// Half-width added to a collapsed box axis.
pub const DEGENERATE_WIDENING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub offsets: Vec<f64>,
    pub delta: f64,
    pub bbox: BoundingBox,
}

/// Offsets of lines `(t, t + b)` evenly spaced over
/// `[min2 - max1, max2 - min1]`, the range of lines meeting the box.
pub fn make_line_grid(bbox: BoundingBox, num_lines: usize) -> Result<LineGrid> {
    if num_lines < 1 {
        return Err(Error::Parameter("num_lines must be >= 1".into()));
    }
    if ![bbox.min1, bbox.min2, bbox.max1, bbox.max2]
        .iter()
        .all(|x| x.is_finite())
        || bbox.width1() < 0.0
        || bbox.width2() < 0.0
    {
        return Err(Error::Parameter(format!("invalid box {bbox:?}")));
    }
    let bbox = bbox.widened(DEGENERATE_WIDENING);
    let start = bbox.min2 - bbox.max1;
    let span = (bbox.max2 - bbox.min1) - start;
    let (offsets, delta) = if num_lines == 1 {
        (vec![start + span / 2.0], span)
    } else {
        let delta = span / (num_lines - 1) as f64;
        ((0..num_lines).map(|i| start + i as f64 * delta).collect(), delta)
    };
    Ok(LineGrid {
        offsets,
        delta,
        bbox,
    })
}

/// A bar on one line, in that line's γ¹ parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberedBar {
    pub birth: f64,
    pub death: f64,
    pub degree: usize,
    /// The death was `+inf` before clipping to the box.
    pub was_infinite: bool,
}

impl FiberedBar {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineBarcode {
    pub offset: f64,
    pub bars: Vec<FiberedBar>,
}

impl LineBarcode {
    pub fn degree(&self, k: usize) -> Vec<FiberedBar> {
        self.bars.iter().copied().filter(|b| b.degree == k).collect()
    }

    /// As plain bars, for bottleneck comparisons.
    pub fn plain(&self, k: usize) -> Vec<Bar> {
        self.bars
            .iter()
            .filter(|b| b.degree == k)
            .map(|b| Bar {
                birth: b.birth,
                death: b.death,
                degree: b.degree,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberedBarcode {
    pub grid: LineGrid,
    pub barcodes: Vec<LineBarcode>,
    pub degrees_present: Vec<usize>,
}

impl FiberedBarcode {
    /// `offset,degree,birth,death,was_infinite` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset,degree,birth,death,was_infinite\n");
        for line in &self.barcodes {
            for b in &line.bars {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    line.offset, b.degree, b.birth, b.death, b.was_infinite
                ));
            }
        }
        out
    }

    pub fn num_bars(&self) -> usize {
        self.barcodes.iter().map(|l| l.bars.len()).sum()
    }
}

/// Homology degrees used for an ambient dimension: 0..n.
pub fn default_degrees(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Clip one-parameter bars to the stretch of line `offset` inside `bbox`.
/// Infinite deaths become `exit + delta`; bars that collapse are dropped.
pub fn clip_to_line(bars: &[Bar], bbox: &BoundingBox, offset: f64, delta: f64) -> Vec<FiberedBar> {
    let (entry, exit) = bbox.line_span(offset);
    if entry > exit {
        return Vec::new();
    }
    bars.iter()
        .filter_map(|b| {
            let birth = b.birth.clamp(entry, exit);
            let (death, was_infinite) = if b.is_infinite() {
                (exit + delta, true)
            } else {
                (b.death.clamp(entry, exit), false)
            };
            (death > birth).then_some(FiberedBar {
                birth,
                death,
                degree: b.degree,
                was_infinite,
            })
        })
        .collect()
}

/// Fibered barcode of `f` along every line of `grid`; the grid's box must
/// contain the field's box.
pub fn compute_fibered_barcode(
    f: &BiGradedField,
    grid: &LineGrid,
    degrees: &[usize],
) -> Result<FiberedBarcode> {
    if !grid.bbox.contains(&f.bbox(), 1e-9) {
        return Err(Error::Parameter(format!(
            "line grid box {:?} does not cover field box {:?}",
            grid.bbox,
            f.bbox()
        )));
    }
    fibered_barcode_in_box(f, grid, degrees)
}

/// Like [`compute_fibered_barcode`] without the coverage check: bars outside
/// the grid's box are clipped to it. Used when the box is shared across a
/// dataset and a sample may exceed it.
pub fn fibered_barcode_in_box(
    f: &BiGradedField,
    grid: &LineGrid,
    degrees: &[usize],
) -> Result<FiberedBarcode> {
    let n = f.dims().len();
    if let Some(bad) = degrees.iter().find(|&&k| k >= n) {
        return Err(Error::Parameter(format!(
            "degree {bad} not available for {n}D data"
        )));
    }
    let mut degrees_present = degrees.to_vec();
    degrees_present.sort_unstable();
    degrees_present.dedup();

    let topology = Arc::new(CubicalTopology::new(f.dims())?);
    let barcodes = grid
        .offsets
        .iter()
        .map(|&offset| {
            let slice = slice_scalar_field(f, Line { offset });
            let complex = CubicalComplex::lower_star(topology.clone(), slice.data())?;
            let raw = compute_persistence(&complex)?;
            let wanted: Vec<Bar> = raw
                .bars
                .into_iter()
                .filter(|b| degrees_present.contains(&b.degree))
                .collect();
            Ok(LineBarcode {
                offset,
                bars: clip_to_line(&wanted, &grid.bbox, offset, grid.delta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberedBarcode {
        grid: grid.clone(),
        barcodes,
        degrees_present,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::build_complex;
    use crate::volume_io::Volume;

    #[test]
    fn grid_examples() {
        let g = make_line_grid(BoundingBox::new(0.0, 0.0, 1.0, 1.0), 3).unwrap();
        assert_eq!(g.offsets, vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.delta, 1.0);

        let g = make_line_grid(BoundingBox::new(0.0, 0.0, 1.0, 1.0), 1).unwrap();
        assert_eq!(g.offsets, vec![0.0]);
        assert_eq!(g.delta, 2.0);

        let g = make_line_grid(BoundingBox::new(0.0, 0.0, 1.0, 2.0), 50).unwrap();
        assert_eq!(g.offsets.len(), 50);
        assert!((g.delta - 3.0 / 49.0).abs() < 1e-15);
        assert_eq!(g.offsets[0], -1.0);
        assert!((g.offsets[49] - 2.0).abs() < 1e-12);
        for w in g.offsets.windows(2) {
            assert!((w[1] - w[0] - g.delta).abs() < 1e-12);
        }

        assert!(make_line_grid(BoundingBox::new(0.0, 0.0, 1.0, 1.0), 0).is_err());
    }

    #[test]
    fn degenerate_box_is_widened() {
        let g = make_line_grid(BoundingBox::new(0.5, 0.2, 0.5, 0.9), 5).unwrap();
        assert!(g.bbox.width1() > 0.0);
        assert_eq!(g.bbox.width2(), 0.7);
    }

    #[test]
    fn constant_field_has_single_component_per_line() {
        let (c1, c2) = (0.3, 0.7);
        let f = BiGradedField::new(vec![4, 4], vec![c1; 16], vec![c2; 16]).unwrap();
        let g = make_line_grid(f.bbox(), 9).unwrap();
        let fb = compute_fibered_barcode(&f, &g, &[0, 1]).unwrap();
        for line in &fb.barcodes {
            let h0 = line.degree(0);
            assert_eq!(h0.len(), 1);
            let (entry, exit) = g.bbox.line_span(line.offset);
            let expect = f64::max(c1, c2 - line.offset).clamp(entry, exit);
            assert_eq!(h0[0].birth, expect);
            assert!(h0[0].was_infinite);
            assert!(line.degree(1).is_empty());
        }
        let mid = &fb.barcodes[4];
        assert_eq!(mid.degree(0)[0].birth, f64::max(c1, c2 - mid.offset));
    }

    #[test]
    fn zero_second_parameter_reproduces_single_parameter_barcode() {
        let mut g1 = vec![0.0; 9];
        g1[4] = 1.0;
        let f = BiGradedField::new(vec![3, 3], g1.clone(), vec![0.0; 9]).unwrap();
        // a square box so the diagonal line stays inside until t = 1
        let g = make_line_grid(BoundingBox::new(0.0, 0.0, 1.0, 1.0), 3).unwrap();
        let fb = compute_fibered_barcode(&f, &g, &[0, 1]).unwrap();
        let line = fb.barcodes.iter().find(|l| l.offset == 0.0).expect("b = 0 on grid");
        let single = compute_persistence(&build_complex(&Volume::new(vec![3, 3], g1).unwrap()).unwrap()).unwrap();
        assert_eq!(line.plain(1), single.degree(1));
        let h0 = line.degree(0);
        assert_eq!(h0.len(), 1);
        assert_eq!(h0[0].birth, single.degree(0)[0].birth);
        assert_eq!(h0[0].death, 1.0 + g.delta);
    }

    #[test]
    fn coverage_and_degree_checks() {
        let f = BiGradedField::new(vec![2, 2], vec![0.0, 1.0, 0.0, 1.0], vec![0.0; 4]).unwrap();
        let small = make_line_grid(BoundingBox::new(0.0, 0.0, 0.5, 0.5), 3).unwrap();
        assert!(matches!(compute_fibered_barcode(&f, &small, &[0]), Err(Error::Parameter(_))));
        let g = make_line_grid(f.bbox(), 3).unwrap();
        assert!(matches!(compute_fibered_barcode(&f, &g, &[2]), Err(Error::Parameter(_))));
    }

    #[test]
    fn clipping_rules() {
        let bbox = BoundingBox::new(0.0, 0.0, 1.0, 1.0);
        let bars = [
            Bar { birth: -0.5, death: 0.5, degree: 1 },
            Bar { birth: 0.2, death: f64::INFINITY, degree: 0 },
            Bar { birth: 1.5, death: 2.0, degree: 1 },
        ];
        let out = clip_to_line(&bars, &bbox, 0.0, 0.25);
        assert_eq!(
            out,
            vec![
                FiberedBar { birth: 0.0, death: 0.5, degree: 1, was_infinite: false },
                FiberedBar { birth: 0.2, death: 1.25, degree: 0, was_infinite: true },
            ]
        );
    }

    #[test]
    fn csv_export_lists_every_bar() {
        let f = BiGradedField::new(vec![2, 2], vec![0.0, 1.0, 0.0, 1.0], vec![0.0; 4]).unwrap();
        let fb = compute_fibered_barcode(&f, &make_line_grid(f.bbox(), 2).unwrap(), &[0]).unwrap();
        let csv = fb.to_csv();
        assert!(csv.starts_with("offset,degree,birth,death,was_infinite\n"));
        assert_eq!(csv.lines().count(), 1 + fb.num_bars());
    }
}
