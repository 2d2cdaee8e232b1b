//! Spatiotemporal motion features.
//!
//! For every point and every step between consecutive frames the feature
//! vector holds the step length and three projected direction cosines, each
//! shifted by one into `[0, 2]`. Stacked per point this gives a
//! `4(L-1) x P` non-negative matrix.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;
use crate::simulate::TrajectoryField;
use crate::Scalar;

/// Default denominator threshold below which a direction cosine is replaced by
/// the neutral value 1.
pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T: Scalar> {
    pub u: NonNegMatrix<T>,
    pub frame_count: usize,
    pub point_count: usize,
}

/// The three direction-cosine blocks, each `(L-1) x P`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleFeatures<T: Scalar> {
    /// x against the x-y projection.
    pub z: Array2<T>,
    /// y against the y-z projection.
    pub x: Array2<T>,
    /// z against the z-x projection.
    pub y: Array2<T>,
}

fn steps_checked<T: Scalar>(traj: &TrajectoryField<T>) -> Result<(usize, usize)> {
    let (p, l) = (traj.num_points(), traj.num_frames());
    if l < 2 {
        return Err(Error::Config(format!("need at least 2 frames, got {l}")));
    }
    Ok((p, l - 1))
}

fn step<T: Scalar>(traj: &TrajectoryField<T>, point: usize, l: usize) -> [T; 3] {
    let a = traj.at(point, l);
    let b = traj.at(point, l + 1);
    [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
}

/// Step length between consecutive frames, `(L-1) x P`.
pub fn magnitude_feature<T: Scalar>(traj: &TrajectoryField<T>) -> Result<Array2<T>> {
    let (p, steps) = steps_checked(traj)?;
    Ok(Array2::from_shape_fn((steps, p), |(l, i)| {
        let d = step(traj, i, l);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }))
}

#[inline]
fn shifted_cosine<T: Scalar>(num: T, other: T, eps: T) -> T {
    let den = (num * num + other * other).sqrt();
    if den < eps {
        T::one()
    } else {
        (num / den).max(-T::one()).min(T::one()) + T::one()
    }
}

pub fn angle_features<T: Scalar>(traj: &TrajectoryField<T>, eps: T) -> Result<AngleFeatures<T>> {
    if !(eps > T::zero()) {
        return Err(Error::Config("eps must be positive".into()));
    }
    let (p, steps) = steps_checked(traj)?;
    let mut z = Array2::zeros((steps, p));
    let mut x = Array2::zeros((steps, p));
    let mut y = Array2::zeros((steps, p));
    for i in 0..p {
        for l in 0..steps {
            let [dx, dy, dz] = step(traj, i, l);
            z[[l, i]] = shifted_cosine(dx, dy, eps);
            x[[l, i]] = shifted_cosine(dy, dz, eps);
            y[[l, i]] = shifted_cosine(dz, dx, eps);
        }
    }
    Ok(AngleFeatures { z, x, y })
}

/// Stacks magnitude, z, x and y blocks into the feature matrix.
pub fn build_feature_matrix<T: Scalar>(traj: &TrajectoryField<T>) -> Result<FeatureMatrix<T>> {
    build_feature_matrix_with_eps(traj, T::lit(DEFAULT_EPS))
}

pub fn build_feature_matrix_with_eps<T: Scalar>(
    traj: &TrajectoryField<T>,
    eps: T,
) -> Result<FeatureMatrix<T>> {
    let (p, steps) = steps_checked(traj)?;
    if p == 0 {
        return Err(Error::Degenerate("trajectory field has no points".into()));
    }
    let mag = magnitude_feature(traj)?;
    let ang = angle_features(traj, eps)?;
    let mut u = Array2::zeros((4 * steps, p));
    for (b, block) in [&mag, &ang.z, &ang.x, &ang.y].into_iter().enumerate() {
        u.slice_mut(s![b * steps..(b + 1) * steps, ..]).assign(block);
    }
    Ok(FeatureMatrix {
        u: NonNegMatrix::new(u)?,
        frame_count: steps + 1,
        point_count: p,
    })
}
