//! Lower-star cubical complexes on voxel grids (voxels are vertices) and
//! their one-parameter persistent homology over GF(2).

mod bottleneck;
mod oracle;
mod persistence;

pub use bottleneck::bottleneck;
pub use oracle::{betti_oracle, component_count, UnionFind};
pub use persistence::{compute_persistence, Bar, Barcode};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::volume_io::Volume;

/// Cell layout of the full cubical grid, independent of any grading.
///
/// Cells live on the doubled grid with side `2 d_i - 1` per axis; an odd
/// coordinate marks a unit interval along that axis, so a cell's dimension is
/// its count of odd coordinates. Cell ids are row-major indices into the
/// doubled grid, which orders cells lexicographically by doubled coordinate.
#[derive(Debug, Clone)]
pub struct CubicalTopology {
    dims: Vec<usize>,
    strides: Vec<usize>,
    cell_dim: Vec<u8>,
    by_dim: Vec<Vec<u32>>,
}

impl CubicalTopology {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::Shape(format!(
                "cubical grids need every dim >= 2, got {dims:?}"
            )));
        }
        let cdims: Vec<usize> = dims.iter().map(|d| 2 * d - 1).collect();
        let mut strides = vec![1; cdims.len()];
        for axis in (0..cdims.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * cdims[axis + 1];
        }
        let total: usize = cdims.iter().product();
        let mut cell_dim = vec![0u8; total];
        let mut by_dim = vec![Vec::new(); dims.len() + 1];
        for (id, slot) in cell_dim.iter_mut().enumerate() {
            let mut rest = id;
            let mut k = 0u8;
            for &s in &strides {
                k += ((rest / s) % 2) as u8;
                rest %= s;
            }
            *slot = k;
            by_dim[k as usize].push(id as u32);
        }
        Ok(CubicalTopology {
            dims: dims.to_vec(),
            strides,
            cell_dim,
            by_dim,
        })
    }

    /// Vertex-grid dims.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ambient_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dim.len()
    }

    pub fn cell_dim(&self, id: usize) -> usize {
        self.cell_dim[id] as usize
    }

    pub fn cells_of_dim(&self, k: usize) -> &[u32] {
        &self.by_dim[k]
    }

    /// Doubled-grid coordinates of a cell.
    pub fn coords(&self, id: usize) -> Vec<usize> {
        let mut rest = id;
        self.strides
            .iter()
            .map(|&s| {
                let c = rest / s;
                rest %= s;
                c
            })
            .collect()
    }

    /// Codimension-one faces, two per odd coordinate.
    pub fn faces(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let coords = self.coords(id);
        self.strides
            .iter()
            .zip(coords)
            .filter(|(_, c)| c % 2 == 1)
            .flat_map(move |(&s, _)| [id - s, id + s])
    }

    /// Vertex ids (row-major indices into the voxel grid) of a cell.
    pub fn vertices(&self, id: usize) -> Vec<usize> {
        let coords = self.coords(id);
        let mut out = vec![0usize];
        for (axis, &c) in coords.iter().enumerate() {
            let lo = c / 2;
            let choices: &[usize] = if c % 2 == 1 { &[0, 1] } else { &[0] };
            out = out
                .iter()
                .flat_map(|&acc| choices.iter().map(move |&d| acc * self.dims[axis] + lo + d))
                .collect();
        }
        out
    }

    /// Doubled-grid id of the vertex at a voxel index.
    pub fn vertex_cell(&self, voxel: usize) -> usize {
        let mut rest = voxel;
        let mut id = 0;
        let mut vstride: usize = self.dims.iter().product();
        for (axis, &s) in self.strides.iter().enumerate() {
            vstride /= self.dims[axis];
            id += 2 * (rest / vstride) * s;
            rest %= vstride;
        }
        id
    }

    /// Lower-star grades: each cell takes the max of its vertex values.
    pub fn lower_star_grades(&self, values: &[f64]) -> Vec<f64> {
        let mut grades = vec![0.0; self.num_cells()];
        for (voxel, &v) in values.iter().enumerate() {
            grades[self.vertex_cell(voxel)] = v;
        }
        // a k-cell's vertices are the union of the vertices of the two faces
        // along any one of its odd axes
        for k in 1..=self.ambient_dim() {
            for &id in &self.by_dim[k] {
                let id = id as usize;
                let mut rest = id;
                let s = *self
                    .strides
                    .iter()
                    .find(|&&s| {
                        let c = rest / s;
                        rest %= s;
                        c % 2 == 1
                    })
                    .expect("k >= 1 cells have an odd axis");
                grades[id] = grades[id - s].max(grades[id + s]);
            }
        }
        grades
    }
}

/// A graded cubical complex with its filtration order fixed.
#[derive(Debug, Clone)]
pub struct CubicalComplex {
    topology: Arc<CubicalTopology>,
    grades: Vec<f64>,
    order: Vec<u32>,
}

impl CubicalComplex {
    /// Grade cells of an existing topology with lower-star values of `field`.
    pub fn lower_star(topology: Arc<CubicalTopology>, field: &[f64]) -> Result<Self> {
        let nvox: usize = topology.dims().iter().product();
        if field.len() != nvox {
            return Err(Error::Shape(format!(
                "{} values for a grid of {nvox} voxels",
                field.len()
            )));
        }
        let grades = topology.lower_star_grades(field);
        Ok(Self::from_grades_unchecked(topology, grades))
    }

    /// Arbitrary per-cell grades. Face monotonicity is checked later by
    /// [`compute_persistence`].
    pub fn from_grades(topology: Arc<CubicalTopology>, grades: Vec<f64>) -> Result<Self> {
        if grades.len() != topology.num_cells() {
            return Err(Error::Shape(format!(
                "{} grades for {} cells",
                grades.len(),
                topology.num_cells()
            )));
        }
        if grades.iter().any(|g| g.is_nan()) {
            return Err(Error::Domain("NaN grade".into()));
        }
        Ok(Self::from_grades_unchecked(topology, grades))
    }

    fn from_grades_unchecked(topology: Arc<CubicalTopology>, grades: Vec<f64>) -> Self {
        let mut order: Vec<u32> = (0..grades.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            grades[a]
                .total_cmp(&grades[b])
                .then(topology.cell_dim[a].cmp(&topology.cell_dim[b]))
                .then(a.cmp(&b))
        });
        CubicalComplex {
            topology,
            grades,
            order,
        }
    }

    pub fn topology(&self) -> &CubicalTopology {
        &self.topology
    }

    pub fn dims(&self) -> &[usize] {
        self.topology.dims()
    }

    pub fn num_cells(&self) -> usize {
        self.grades.len()
    }

    pub fn grade(&self, id: usize) -> f64 {
        self.grades[id]
    }

    pub fn grades(&self) -> &[f64] {
        &self.grades
    }

    /// Cell ids sorted by (grade, dimension, doubled coordinate).
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        (0..=self.topology.ambient_dim())
            .map(|k| self.topology.cells_of_dim(k).len())
            .collect()
    }
}

/// Full lower-star cubical complex of a scalar field.
pub fn build_complex(field: &Volume) -> Result<CubicalComplex> {
    let topology = Arc::new(CubicalTopology::new(field.dims())?);
    CubicalComplex::lower_star(topology, field.data())
}
