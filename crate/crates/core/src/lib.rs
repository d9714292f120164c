//! Topological features of grayscale images and volumes from the G-LoG
//! bi-filtration: Gaussian-smoothed intensity paired with the
//! Laplacian-of-Gaussian response.
//!
//! The pipeline is
//!
//! 1. [`volume_io`]: read NPY/NPZ/PGM data and normalize to `[0, 1]`.
//! 2. [`kernels`] and [`bifiltration`]: compute the per-voxel grade pair
//!    (γ¹, γ²).
//! 3. [`cubical`]: lower-star cubical persistence of one-parameter slices.
//! 4. [`fibered`]: barcodes along a grid of slope-one lines, an approximation
//!    of the bi-parameter persistence module.
//! 5. [`vectorize`]: multi-parameter persistence images, 50×50 per degree.
//! 6. [`learn`]: MLP classifier, accuracy and AUC.
//!
//! [`pipeline`] composes steps 2 to 5 over whole datasets, [`synthetic`]
//! generates labelled test images and [`stability`] checks the sup-norm
//! stability bound numerically.

// Negated comparisons reject NaN parameters along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifiltration;
pub mod cubical;
pub mod error;
pub mod fibered;
pub mod kernels;
pub mod learn;
pub mod pipeline;
pub mod stability;
pub mod synthetic;
pub mod vectorize;
pub mod volume_io;

pub use error::{Error, Result};
