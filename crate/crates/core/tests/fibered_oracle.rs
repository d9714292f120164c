//! Fibered barcodes against direct homology computations of each slice.

use glog_core::bifiltration::{slice_scalar_field, BiGradedField, Line};
use glog_core::cubical::{betti_oracle, build_complex};
use glog_core::fibered::{compute_fibered_barcode, make_line_grid};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> BiGradedField {
    let len = dims.iter().product();
    // Coarse values so that ties between grades occur.
    let mut draw = || (0..len).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
    let g1 = draw();
    let g2 = draw();
    BiGradedField::new(dims, g1, g2).unwrap()
}

#[test]
fn alive_counts_match_betti_numbers_on_every_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let f = random_field(&mut rng, vec![4, 4]);
        let grid = make_line_grid(f.bbox(), 9).unwrap();
        let fb = compute_fibered_barcode(&f, &grid, &[0, 1]).unwrap();
        for line in &fb.barcodes {
            let slice = slice_scalar_field(&f, Line { offset: line.offset });
            let complex = build_complex(&slice).unwrap();
            let (_, exit) = grid.bbox.line_span(line.offset);
            let mut grades: Vec<f64> = slice.data().to_vec();
            grades.sort_by(f64::total_cmp);
            grades.dedup();
            for &t in grades.iter().filter(|&&t| t < exit) {
                let betti = betti_oracle(&complex, t);
                for (k, &beta) in betti.iter().enumerate() {
                    let alive = line
                        .bars
                        .iter()
                        .filter(|b| b.degree == k && b.birth <= t && t < b.death)
                        .count();
                    assert_eq!(alive, beta, "offset {} t {t} degree {k}", line.offset);
                }
            }
        }
    }
}

#[test]
fn refining_the_grid_keeps_shared_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let f = random_field(&mut rng, vec![5, 5]);
        let coarse = make_line_grid(f.bbox(), 6).unwrap();
        let fine = make_line_grid(f.bbox(), 11).unwrap();
        let a = compute_fibered_barcode(&f, &coarse, &[0, 1]).unwrap();
        let b = compute_fibered_barcode(&f, &fine, &[0, 1]).unwrap();
        for (i, line) in a.barcodes.iter().enumerate() {
            let other = &b.barcodes[2 * i];
            assert!((line.offset - other.offset).abs() < 1e-12);
            // Essential bars end one spacing past the exit, and the spacing
            // differs between the grids.
            let finite = |bars: &[glog_core::fibered::FiberedBar]| {
                bars.iter()
                    .map(|b| (b.degree, b.birth, if b.was_infinite { f64::NAN } else { b.death }))
                    .map(|(k, x, y)| (k, x.to_bits(), y.to_bits()))
                    .collect::<Vec<_>>()
            };
            assert_eq!(finite(&line.bars), finite(&other.bars));
        }
    }
}
