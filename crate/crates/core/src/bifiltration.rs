//! The G-LoG bi-graded field and its restriction to slope-one lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    convolve, default_radius, gaussian_kernel, lipschitz_constant, log_kernel, KernelKind,
    KernelSpec,
};
use crate::volume_io::Volume;

/// Axis-aligned rectangle in the (γ¹, γ²) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min1: f64,
    pub min2: f64,
    pub max1: f64,
    pub max2: f64,
}

impl BoundingBox {
    pub fn new(min1: f64, min2: f64, max1: f64, max2: f64) -> Self {
        BoundingBox {
            min1,
            min2,
            max1,
            max2,
        }
    }

    /// Tight box around the pairs `(g1[i], g2[i])`.
    pub fn of_pairs(g1: &[f64], g2: &[f64]) -> Self {
        let (min1, max1) = min_max(g1);
        let (min2, max2) = min_max(g2);
        BoundingBox {
            min1,
            min2,
            max1,
            max2,
        }
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min1: self.min1.min(other.min1),
            min2: self.min2.min(other.min2),
            max1: self.max1.max(other.max1),
            max2: self.max2.max(other.max2),
        }
    }

    pub fn contains(&self, other: &BoundingBox, tol: f64) -> bool {
        other.min1 >= self.min1 - tol
            && other.min2 >= self.min2 - tol
            && other.max1 <= self.max1 + tol
            && other.max2 <= self.max2 + tol
    }

    pub fn width1(&self) -> f64 {
        self.max1 - self.min1
    }

    pub fn width2(&self) -> f64 {
        self.max2 - self.min2
    }

    pub fn diagonal(&self) -> f64 {
        self.width1().hypot(self.width2())
    }

    /// Widen any collapsed axis by `eps` on each side.
    pub fn widened(&self, eps: f64) -> BoundingBox {
        let mut b = *self;
        if b.width1() <= 0.0 {
            b.min1 -= eps;
            b.max1 += eps;
        }
        if b.width2() <= 0.0 {
            b.min2 -= eps;
            b.max2 += eps;
        }
        b
    }

    /// Line parameters `[entry, exit]` over which `(t, t + offset)` lies in
    /// the box. `entry > exit` when the line misses it.
    pub fn line_span(&self, offset: f64) -> (f64, f64) {
        (
            self.min1.max(self.min2 - offset),
            self.max1.min(self.max2 - offset),
        )
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// Per-voxel grade pair: γ¹ (Gaussian-smoothed intensity) and γ² (LoG
/// response).
#[derive(Debug, Clone, PartialEq)]
pub struct BiGradedField {
    dims: Vec<usize>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    bbox: BoundingBox,
}

impl BiGradedField {
    pub fn new(dims: Vec<usize>, g1: Vec<f64>, g2: Vec<f64>) -> Result<Self> {
        // borrow Volume's shape checks
        let g1 = Volume::new(dims.clone(), g1)?.into_data();
        let g2 = Volume::new(dims.clone(), g2)?.into_data();
        if g1.iter().chain(&g2).any(|x| !x.is_finite()) {
            return Err(Error::Domain("bi-graded field contains non-finite values".into()));
        }
        let bbox = BoundingBox::of_pairs(&g1, &g2);
        Ok(BiGradedField { dims, g1, g2, bbox })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn g1(&self) -> &[f64] {
        &self.g1
    }

    pub fn g2(&self) -> &[f64] {
        &self.g2
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.g1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g1.is_empty()
    }
}

/// Kernel pair used to build a G-LoG field. `sigma_gauss == 0` means γ¹ is
/// the input itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlogParams {
    pub sigma_gauss: f64,
    pub sigma_log: f64,
}

impl Default for GlogParams {
    fn default() -> Self {
        GlogParams {
            sigma_gauss: 0.5,
            sigma_log: 1.0,
        }
    }
}

/// Sampled kernels for a fixed ambient dimension, reusable across volumes.
#[derive(Debug, Clone)]
pub struct GlogOperator {
    pub params: GlogParams,
    pub dims_n: usize,
    gauss: Option<crate::kernels::DiscreteKernel>,
    log: crate::kernels::DiscreteKernel,
}

impl GlogOperator {
    pub fn new(params: GlogParams, dims_n: usize) -> Result<Self> {
        if !(params.sigma_log > 0.0) {
            return Err(Error::Parameter(format!(
                "sigma_log must be positive, got {}",
                params.sigma_log
            )));
        }
        if !(params.sigma_gauss >= 0.0) {
            return Err(Error::Parameter(format!(
                "sigma_gauss must be >= 0, got {}",
                params.sigma_gauss
            )));
        }
        let gauss = if params.sigma_gauss > 0.0 {
            Some(gaussian_kernel(&KernelSpec {
                sigma: params.sigma_gauss,
                dims_n,
                radius: default_radius(params.sigma_gauss),
                kind: KernelKind::Gaussian,
            })?)
        } else {
            None
        };
        let log = log_kernel(&KernelSpec::new(KernelKind::Log, params.sigma_log, dims_n))?;
        Ok(GlogOperator {
            params,
            dims_n,
            gauss,
            log,
        })
    }

    /// Discrete Lipschitz constants (L₁, L₂) of the two branches. The
    /// identity branch has constant 1.
    pub fn lipschitz_constants(&self) -> (f64, f64) {
        (
            self.gauss.as_ref().map_or(1.0, lipschitz_constant),
            lipschitz_constant(&self.log),
        )
    }

    pub fn apply(&self, v: &Volume) -> Result<BiGradedField> {
        if v.ndim() != self.dims_n {
            return Err(Error::Shape(format!(
                "operator built for {}D, volume is {}D",
                self.dims_n,
                v.ndim()
            )));
        }
        let g1 = match &self.gauss {
            Some(k) => convolve(v, k)?.into_data(),
            None => v.data().to_vec(),
        };
        let g2 = convolve(v, &self.log)?.into_data();
        BiGradedField::new(v.dims().to_vec(), g1, g2)
    }
}

pub fn compute_glog(v: &Volume, sigma_gauss: f64, sigma_log: f64) -> Result<BiGradedField> {
    GlogOperator::new(
        GlogParams {
            sigma_gauss,
            sigma_log,
        },
        v.ndim(),
    )?
    .apply(v)
}

/// A line `{(t, t + offset)}` of direction (1,1) in the grade plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub offset: f64,
}

/// Scalar field whose sublevel sets are the bi-filtration restricted to the
/// line: `out[x] = max(g1[x], g2[x] - offset)`.
pub fn slice_scalar_field(f: &BiGradedField, line: Line) -> Volume {
    let data = f
        .g1
        .iter()
        .zip(&f.g2)
        .map(|(&a, &b)| a.max(b - line.offset))
        .collect();
    Volume::new(f.dims.clone(), data).expect("field dims already validated")
}

/// `max_x max(|Δg1(x)|, |Δg2(x)|)`.
pub fn sup_distance(f: &BiGradedField, h: &BiGradedField) -> Result<f64> {
    if f.dims != h.dims {
        return Err(Error::Shape(format!("dims {:?} vs {:?}", f.dims, h.dims)));
    }
    Ok(f
        .g1
        .iter()
        .zip(&h.g1)
        .chain(f.g2.iter().zip(&h.g2))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Per-branch sup distances `(‖Δγ¹‖∞, ‖Δγ²‖∞)`.
pub fn branch_distances(f: &BiGradedField, h: &BiGradedField) -> Result<(f64, f64)> {
    if f.dims != h.dims {
        return Err(Error::Shape(format!("dims {:?} vs {:?}", f.dims, h.dims)));
    }
    let d = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    Ok((d(&f.g1, &h.g1), d(&f.g2, &h.g2)))
}
