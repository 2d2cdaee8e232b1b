use ndarray::Zip;

use super::init::multiplicative;
use super::single::warm_start;
use super::{normalize_building_blocks, FactorPair, SolverConfig, FLOOR};
use crate::error::Result;
use crate::graph::GraphLaplacian;
use crate::matrix::NonNegMatrix;
use crate::Scalar;

/// Shallow baseline: after the warm start, `ista_iters` multiplicative
/// updates of both factors on the same objective, with the sparsity weight in
/// the denominator of the `W` update and unit-norm columns of `V` restored
/// after every update.
pub fn solve_shallow_sparse<T: Scalar>(
    u: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    cfg: &SolverConfig<T>,
) -> Result<FactorPair<T>> {
    cfg.validate()?;
    let FactorPair { v, w } = warm_start(u, lap, cfg)?;
    let (mut v, mut w) = (v.into_array(), w.into_array());
    let u = u.as_array();
    let floor = T::lit(FLOOR);
    let beta = cfg.beta;
    let q = (beta > T::zero()).then(|| lap.affinity());

    for _ in 0..cfg.ista_iters {
        let num = u.dot(&w.t());
        let den = v.dot(&w.dot(&w.t()));
        multiplicative(&mut v, &num, &den, floor);
        let pair = normalize_building_blocks(FactorPair {
            v: NonNegMatrix::from_array_unchecked(v),
            w: NonNegMatrix::from_array_unchecked(w),
        });
        (v, w) = (pair.v.into_array(), pair.w.into_array());

        let mut num = v.t().dot(u);
        let mut den = v.t().dot(&v).dot(&w);
        if let Some(q) = &q {
            num.scaled_add(beta, &w.dot(q));
            Zip::from(&mut den)
                .and(&w)
                .and_broadcast(&lap.degree)
                .for_each(|d, &wij, &deg| *d += beta * wij * deg);
        }
        den.mapv_inplace(|d| d + cfg.lambda);
        multiplicative(&mut w, &num, &den, floor);
    }

    Ok(FactorPair {
        v: NonNegMatrix::new(v)?,
        w: NonNegMatrix::new(w)?,
    })
}
