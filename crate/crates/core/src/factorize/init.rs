use ndarray::{Array2, Zip};
use rand::Rng;

use super::FactorPair;
use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::matrix::NonNegMatrix;
use crate::rng::{stream, Seed};
use crate::Scalar;

/// Denominator floor of the multiplicative updates.
pub const FLOOR: f64 = 1e-12;

/// Graph-regularized NMF warm start.
///
/// Draws `V` and `W` uniformly from `(0, 1]` and applies `iters` rounds of
///
/// ```text
/// V <- V * (U W^T) / (V W W^T)
/// W <- W * (V^T U + beta W Q) / (V^T V W + beta W D)
/// ```
///
/// with `Q` and `D` recovered from the Laplacian.
pub fn init_gnmf<T: Scalar>(
    u: &NonNegMatrix<T>,
    k: usize,
    lap: &GraphLaplacian<T>,
    beta: T,
    iters: usize,
    seed: Seed,
) -> Result<FactorPair<T>> {
    let (m, n) = (u.rows(), u.cols());
    if k == 0 || k > m.min(n) {
        return Err(Error::Config(format!(
            "k = {k} must lie in 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    super::check_shapes(u, lap)?;

    let mut rng = seed.rng(stream::INIT);
    let mut draw = || T::lit(1.0 - rng.random::<f64>());
    let mut v = Array2::from_shape_simple_fn((m, k), &mut draw);
    let mut w = Array2::from_shape_simple_fn((k, n), &mut draw);

    if iters > 0 {
        let u = u.as_array();
        let floor = T::lit(FLOOR);
        let graph = beta > T::zero();
        let q = if graph { Some(lap.affinity()) } else { None };
        for _ in 0..iters {
            let num = u.dot(&w.t());
            let den = v.dot(&w.dot(&w.t()));
            multiplicative(&mut v, &num, &den, floor);

            let mut num = v.t().dot(u);
            let mut den = v.t().dot(&v).dot(&w);
            if let Some(q) = &q {
                num.scaled_add(beta, &w.dot(q));
                Zip::from(&mut den)
                    .and(&w)
                    .and_broadcast(&lap.degree)
                    .for_each(|d, &wij, &deg| *d += beta * wij * deg);
            }
            multiplicative(&mut w, &num, &den, floor);
        }
    }

    Ok(FactorPair {
        v: NonNegMatrix::new(v)?,
        w: NonNegMatrix::new(w)?,
    })
}

pub(crate) fn multiplicative<T: Scalar>(x: &mut Array2<T>, num: &Array2<T>, den: &Array2<T>, floor: T) {
    Zip::from(x).and(num).and(den).for_each(|x, &a, &b| {
        *x = *x * a / b.max(floor);
    });
}

/// Rescales the columns of `V` to unit Euclidean norm and the rows of `W` by
/// the inverse factors, leaving `V W` unchanged up to rounding. Zero columns
/// are left alone.
pub fn normalize_building_blocks<T: Scalar>(pair: FactorPair<T>) -> FactorPair<T> {
    let mut v = pair.v.into_array();
    let mut w = pair.w.into_array();
    for j in 0..v.ncols() {
        let norm = v.column(j).dot(&v.column(j)).sqrt();
        if norm > T::zero() {
            v.column_mut(j).mapv_inplace(|x| x / norm);
            w.row_mut(j).mapv_inplace(|x| x * norm);
        }
    }
    FactorPair {
        v: NonNegMatrix::from_array_unchecked(v),
        w: NonNegMatrix::from_array_unchecked(w),
    }
}
