use serde::{Deserialize, Serialize};

use super::CubicalComplex;
use crate::error::{Error, Result};

/// One persistence interval `[birth, death)`; `death` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    pub death: f64,
    pub degree: usize,
}

impl Bar {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_infinite(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub bars: Vec<Bar>,
}

impl Barcode {
    /// Bars sorted by (degree, birth, death) so equal multisets compare equal.
    pub fn from_bars(mut bars: Vec<Bar>) -> Self {
        bars.sort_by(|a, b| {
            a.degree
                .cmp(&b.degree)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        Barcode { bars }
    }

    pub fn degree(&self, k: usize) -> Vec<Bar> {
        self.bars.iter().copied().filter(|b| b.degree == k).collect()
    }

    pub fn alive_at(&self, t: f64, k: usize) -> usize {
        self.bars
            .iter()
            .filter(|b| b.degree == k && b.alive_at(t))
            .count()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// `degree,birth,death` rows, `inf` for infinite deaths.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,birth,death\n");
        for b in &self.bars {
            out.push_str(&format!("{},{},{}\n", b.degree, b.birth, fmt_death(b.death)));
        }
        out
    }
}

pub(crate) fn fmt_death(d: f64) -> String {
    if d == f64::INFINITY {
        "inf".to_string()
    } else {
        d.to_string()
    }
}

/// `a ^= b` on sorted index lists.
fn xor_into(a: &mut Vec<u32>, b: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&a[i..]);
    scratch.extend_from_slice(&b[j..]);
    std::mem::swap(a, scratch);
}

/// Persistent homology of a graded cubical complex in degrees `0..n`.
///
/// Standard column reduction over GF(2), processed from the top dimension
/// down so that pivot rows found in dimension k+1 clear their own columns in
/// dimension k.
pub fn compute_persistence(c: &CubicalComplex) -> Result<Barcode> {
    let top = c.topology();
    let n = top.ambient_dim();
    let ncells = c.num_cells();

    for id in 0..ncells {
        if let Some(f) = top.faces(id).find(|&f| c.grade(f) > c.grade(id)) {
            return Err(Error::Precondition(format!(
                "face {f} (grade {}) enters after cell {id} (grade {})",
                c.grade(f),
                c.grade(id)
            )));
        }
    }

    let order = c.order();
    let mut pos = vec![0u32; ncells];
    for (p, &id) in order.iter().enumerate() {
        pos[id as usize] = p as u32;
    }

    // pivot_owner[row position] = column position whose reduced low is row
    let mut pivot_owner = vec![u32::MAX; ncells];
    let mut cleared = vec![false; ncells];
    let mut paired = vec![false; ncells];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); ncells];
    let mut bars = Vec::new();
    let mut scratch = Vec::new();

    for k in (1..=n).rev() {
        let mut columns: Vec<u32> = top.cells_of_dim(k).iter().map(|&id| pos[id as usize]).collect();
        columns.sort_unstable();
        for &j in &columns {
            if cleared[j as usize] {
                continue;
            }
            let id = order[j as usize] as usize;
            let mut col: Vec<u32> = top.faces(id).map(|f| pos[f]).collect();
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low as usize];
                if owner == u32::MAX {
                    break;
                }
                xor_into(&mut col, &reduced[owner as usize], &mut scratch);
            }
            if let Some(&low) = col.last() {
                pivot_owner[low as usize] = j;
                cleared[low as usize] = true;
                paired[low as usize] = true;
                paired[j as usize] = true;
                let birth = c.grade(order[low as usize] as usize);
                let death = c.grade(id);
                if death > birth {
                    bars.push(Bar {
                        birth,
                        death,
                        degree: k - 1,
                    });
                }
                reduced[j as usize] = col;
            }
        }
    }

    for (p, &id) in order.iter().enumerate() {
        let k = top.cell_dim(id as usize);
        if !paired[p] && k < n {
            bars.push(Bar {
                birth: c.grade(id as usize),
                death: f64::INFINITY,
                degree: k,
            });
        }
    }
    Ok(Barcode::from_bars(bars))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cubical::{build_complex, CubicalTopology};
    use crate::volume_io::Volume;

    fn barcode(dims: Vec<usize>, values: Vec<f64>) -> Barcode {
        compute_persistence(&build_complex(&Volume::new(dims, values).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn contractible_grid_has_one_essential_class() {
        let b = barcode(vec![3, 3], vec![0.0; 9]);
        assert_eq!(
            b.bars,
            vec![Bar {
                birth: 0.0,
                death: f64::INFINITY,
                degree: 0
            }]
        );
    }

    #[test]
    fn bright_center_makes_a_loop() {
        let mut v = vec![0.0; 9];
        v[4] = 1.0;
        let b = barcode(vec![3, 3], v);
        assert_eq!(
            b.bars,
            vec![
                Bar { birth: 0.0, death: f64::INFINITY, degree: 0 },
                Bar { birth: 0.0, death: 1.0, degree: 1 },
            ]
        );
    }

    #[test]
    fn separated_corners_merge_at_one() {
        let mut v = vec![1.0; 9];
        v[0] = 0.0;
        v[8] = 0.0;
        let b = barcode(vec![3, 3], v);
        assert_eq!(
            b.bars,
            vec![
                Bar { birth: 0.0, death: 1.0, degree: 0 },
                Bar { birth: 0.0, death: f64::INFINITY, degree: 0 },
            ]
        );
    }

    #[test]
    fn hollow_cube_has_a_void() {
        let mut v = vec![0.0; 27];
        v[13] = 1.0;
        let b = barcode(vec![3, 3, 3], v);
        assert_eq!(b.degree(2), vec![Bar { birth: 0.0, death: 1.0, degree: 2 }]);
        assert!(b.degree(1).is_empty());
    }

    #[test]
    fn non_monotone_grades_are_rejected() {
        let top = Arc::new(CubicalTopology::new(&[2, 2]).unwrap());
        let mut grades = vec![0.0; 9];
        grades[0] = 5.0;
        let c = CubicalComplex::from_grades(top, grades).unwrap();
        assert!(matches!(compute_persistence(&c), Err(Error::Precondition(_))));
    }

    #[test]
    fn deterministic_output() {
        let v: Vec<f64> = (0..36).map(|i| ((i * 17) % 11) as f64 / 11.0).collect();
        assert_eq!(barcode(vec![6, 6], v.clone()), barcode(vec![6, 6], v));
    }

    #[test]
    fn csv_export() {
        let b = barcode(vec![2, 2], vec![0.0, 0.5, 0.5, 1.0]);
        assert_eq!(b.to_csv(), "degree,birth,death\n0,0,inf\n");
    }
}
