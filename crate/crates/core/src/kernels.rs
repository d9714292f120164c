//! Sampled Gaussian and Laplacian-of-Gaussian kernels and their convolution
//! with volumes under symmetric boundary reflection.

use crate::error::{Error, Result};
use crate::volume_io::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub sigma: f64,
    pub dims_n: usize,
    pub radius: usize,
    pub kind: KernelKind,
}

impl KernelSpec {
    /// Kernel with the default truncation radius `max(1, ceil(3 sigma))`.
    pub fn new(kind: KernelKind, sigma: f64, dims_n: usize) -> Self {
        KernelSpec {
            sigma,
            dims_n,
            radius: default_radius(sigma),
            kind,
        }
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.radius = radius;
        self
    }

    fn validate(&self, expected: KernelKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::Parameter(format!(
                "spec of kind {:?} passed to the {expected:?} constructor",
                self.kind
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "kernel sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(2..=3).contains(&self.dims_n) {
            return Err(Error::Parameter(format!(
                "kernels are 2D or 3D, got n = {}",
                self.dims_n
            )));
        }
        if self.radius < 1 {
            return Err(Error::Parameter("kernel radius must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// `G(x) = exp(-|x|^2 / 2 sigma^2)`, unnormalized.
pub fn gaussian(x: &[f64], sigma: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-r2 / (2.0 * sigma * sigma)).exp()
}

/// The Laplacian of [`gaussian`]: `((|x|^2 - n sigma^2) / sigma^4) G(x)`.
pub fn laplacian_of_gaussian(x: &[f64], sigma: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s2 = sigma * sigma;
    (r2 - x.len() as f64 * s2) / (s2 * s2) * (-r2 / (2.0 * s2)).exp()
}

/// Lipschitz constant of the continuous G-LoG map in the sup norm:
/// `max((2 pi s^2)^(n/2), 2n (2 pi s^2)^(n/2) / s^2)`.
///
/// The two terms bound the Gaussian and LoG branches, so each takes its own
/// sigma here. Reported for reference only; the sampled kernels have their
/// own constants, see [`lipschitz_constant`].
pub fn continuum_stability_constant(sigma_gauss: f64, sigma_log: f64, n: usize) -> f64 {
    let mass = |s: f64| (2.0 * std::f64::consts::PI * s * s).powf(n as f64 / 2.0);
    let gauss = if sigma_gauss > 0.0 { mass(sigma_gauss) } else { 1.0 };
    let log = 2.0 * n as f64 * mass(sigma_log) / (sigma_log * sigma_log);
    gauss.max(log)
}

/// Kernel weights over the integer hypercube `[-radius, radius]^n`, row-major
/// with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub dims_n: usize,
    pub radius: usize,
    pub weights: Vec<f64>,
}

impl DiscreteKernel {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn offsets(&self) -> impl Iterator<Item = Vec<isize>> + '_ {
        let side = self.side();
        let r = self.radius as isize;
        (0..self.weights.len()).map(move |mut flat| {
            let mut off = vec![0isize; self.dims_n];
            for axis in (0..self.dims_n).rev() {
                off[axis] = (flat % side) as isize - r;
                flat /= side;
            }
            off
        })
    }

    /// Weight at an offset in `[-radius, radius]^n`.
    pub fn weight(&self, offset: &[isize]) -> f64 {
        let side = self.side() as isize;
        let flat = offset
            .iter()
            .fold(0isize, |acc, &o| acc * side + o + self.radius as isize);
        self.weights[flat as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn sample(spec: &KernelSpec, f: impl Fn(&[f64]) -> f64) -> DiscreteKernel {
    let shell = DiscreteKernel {
        dims_n: spec.dims_n,
        radius: spec.radius,
        weights: vec![0.0; (2 * spec.radius + 1).pow(spec.dims_n as u32)],
    };
    let weights = shell
        .offsets()
        .map(|off| {
            let x: Vec<f64> = off.iter().map(|&o| o as f64).collect();
            f(&x)
        })
        .collect();
    DiscreteKernel { weights, ..shell }
}

/// Point-sampled Gaussian normalized to unit sum.
pub fn gaussian_kernel(spec: &KernelSpec) -> Result<DiscreteKernel> {
    spec.validate(KernelKind::Gaussian)?;
    let mut k = sample(spec, |x| gaussian(x, spec.sigma));
    let total = k.sum();
    k.weights.iter_mut().for_each(|w| *w /= total);
    Ok(k)
}

/// Point-sampled LoG with its mean subtracted so the weights sum to zero.
pub fn log_kernel(spec: &KernelSpec) -> Result<DiscreteKernel> {
    spec.validate(KernelKind::Log)?;
    let mut k = sample(spec, |x| laplacian_of_gaussian(x, spec.sigma));
    let mean = k.sum() / k.weights.len() as f64;
    k.weights.iter_mut().for_each(|w| *w -= mean);
    Ok(k)
}

/// Half-sample symmetric reflection: -1 -> 0, d -> d-1, applied until the
/// index falls inside `[0, d)`.
pub fn reflect(mut i: isize, d: usize) -> usize {
    let d = d as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= d {
            i = 2 * d - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// `out[x] = sum_a v[reflect(x - a)] * k[a]`.
pub fn convolve(v: &Volume, k: &DiscreteKernel) -> Result<Volume> {
    if v.ndim() != k.dims_n {
        return Err(Error::Shape(format!(
            "{}D kernel applied to a {}D volume",
            k.dims_n,
            v.ndim()
        )));
    }
    let r = k.radius as isize;
    let side = k.side();
    // Treat 2D as 3D with a singleton leading axis and radius 0 along it.
    let (dims, radii) = match *v.dims() {
        [h, w] => ([1, h, w], [0, r, r]),
        [d, h, w] => ([d, h, w], [r, r, r]),
        _ => unreachable!("Volume guarantees 2 or 3 dims"),
    };
    // tables[axis][x + radius_axis - a + radius_axis] = reflect(x - a)
    let tables: Vec<Vec<usize>> = (0..3)
        .map(|axis| {
            let ra = radii[axis];
            (-2 * ra..dims[axis] as isize)
                .map(|i| reflect(i + ra, dims[axis]))
                .collect()
        })
        .collect();
    let taps: Vec<(usize, usize, usize, f64)> = (0..=2 * radii[0])
        .flat_map(|a0| {
            (0..=2 * radii[1]).flat_map(move |a1| (0..=2 * radii[2]).map(move |a2| (a0, a1, a2)))
        })
        .map(|(a0, a1, a2)| {
            let flat = if k.dims_n == 2 {
                a1 as usize * side + a2 as usize
            } else {
                (a0 as usize * side + a1 as usize) * side + a2 as usize
            };
            (a0 as usize, a1 as usize, a2 as usize, k.weights[flat])
        })
        .collect();

    let data = v.data();
    let (d0, d1, d2) = (dims[0], dims[1], dims[2]);
    let mut out = vec![0.0; data.len()];
    for x0 in 0..d0 {
        for x1 in 0..d1 {
            for x2 in 0..d2 {
                let mut acc = 0.0;
                for &(a0, a1, a2, w) in &taps {
                    // offset a = a_idx - radius, so x - a = x + radius - a_idx
                    let i0 = tables[0][x0 + 2 * radii[0] as usize - a0];
                    let i1 = tables[1][x1 + 2 * radii[1] as usize - a1];
                    let i2 = tables[2][x2 + 2 * radii[2] as usize - a2];
                    acc += data[(i0 * d1 + i1) * d2 + i2] * w;
                }
                out[(x0 * d1 + x1) * d2 + x2] = acc;
            }
        }
    }
    Volume::new(v.dims().to_vec(), out)
}

/// Sup-norm Lipschitz constant of convolution with `k`: the sum of absolute
/// weights.
pub fn lipschitz_constant(k: &DiscreteKernel) -> f64 {
    k.weights.iter().map(|w| w.abs()).sum()
}
