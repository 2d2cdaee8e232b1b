//! Common and subject-specific functional units from motion trajectories.
//!
//! The pipeline turns Lagrangian trajectories into a non-negative feature
//! matrix, factorizes it with a graph-regularized sparse NMF solved by a fixed
//! number of unrolled ISTA iterations (optionally coupled across subjects
//! through a common weighting map), and partitions the weighting maps with
//! spectral clustering.
//!
//! Every numerical routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the element type to `f64`, which is what the
//! CLI and the file formats use.

pub mod cluster;
pub mod csv_io;
pub mod dataset_io;
pub mod error;
pub mod factorize;
pub mod features;
pub mod graph;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod rng;
mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use rng::Seed;
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type Matrix32 = matrix::Matrix<f32>;
pub type NonNegMatrix64 = matrix::NonNegMatrix<f64>;
pub type NonNegMatrix32 = matrix::NonNegMatrix<f32>;
