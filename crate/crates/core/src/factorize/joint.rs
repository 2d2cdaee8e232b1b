use ndarray::Array2;
use rayon::prelude::*;

use super::ista::IstaKernel;
use super::objective_joint;
use super::single::{run_layers, step_constant, warm_start};
use super::{FactorPair, SolverConfig};
use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::matrix::NonNegMatrix;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel<T: Scalar> {
    /// Per-subject `(V_i, W_i)`.
    pub pairs: Vec<FactorPair<T>>,
    /// Common weighting map `W*`.
    pub w_star: NonNegMatrix<T>,
    /// Step constant `c_i` of each subject.
    pub steps: Vec<T>,
    /// Joint objective after each outer round.
    pub objective_trace: Vec<T>,
}

/// `sum_i alpha_i W_i / sum_i alpha_i`, accumulated as a running mean so that
/// identical inputs reproduce themselves exactly. `alpha = None` is uniform.
pub fn weighted_mean<T: Scalar>(
    maps: &[NonNegMatrix<T>],
    alpha: Option<&[T]>,
) -> Result<NonNegMatrix<T>> {
    running_mean(maps.iter().map(|m| m.as_array()), alpha)
}

fn running_mean<'a, T: Scalar>(
    mut maps: impl ExactSizeIterator<Item = &'a Array2<T>>,
    alpha: Option<&[T]>,
) -> Result<NonNegMatrix<T>> {
    let n = maps.len();
    if let Some(a) = alpha {
        if a.len() != n {
            return Err(Error::Length {
                left: n,
                right: a.len(),
            });
        }
    }
    let weight = |i: usize| alpha.map_or(T::one(), |a| a[i]);
    let first = maps
        .next()
        .ok_or_else(|| Error::Config("common map needs at least one subject".into()))?;
    let mut mean = first.clone();
    let mut total = weight(0);
    for (i, w) in maps.enumerate() {
        if w.dim() != mean.dim() {
            return Err(Error::Shape(format!(
                "weighting maps {:?} and {:?}",
                mean.dim(),
                w.dim()
            )));
        }
        let a = weight(i + 1);
        total += a;
        let f = a / total;
        mean.zip_mut_with(w, |m, &x| *m += f * (x - *m));
    }
    NonNegMatrix::from_clamped(mean)
}

/// Joint solve over `N` subjects sharing a common weighting map.
///
/// Every subject gets the same warm-start seed. Each of the `outer_rounds`
/// rounds runs `H` layers per subject against the current `W*` (in parallel
/// on the ambient rayon pool; results are assembled in subject order) and then
/// recomputes `W*` as the `alpha`-weighted mean.
pub fn solve_joint<T: Scalar>(
    us: &[NonNegMatrix<T>],
    laps: &[GraphLaplacian<T>],
    cfg: &SolverConfig<T>,
) -> Result<JointModel<T>> {
    cfg.validate()?;
    if us.is_empty() {
        return Err(Error::Config("joint solve needs at least one subject".into()));
    }
    if laps.len() != us.len() {
        return Err(Error::Length {
            left: us.len(),
            right: laps.len(),
        });
    }
    if let Some(a) = &cfg.alpha {
        if a.len() != us.len() {
            return Err(Error::Config(format!(
                "{} alpha weights for {} subjects",
                a.len(),
                us.len()
            )));
        }
    }
    let n = us[0].cols();
    if let Some(bad) = us.iter().find(|u| u.cols() != n) {
        return Err(Error::Shape(format!(
            "subjects must share the point count: {} vs {}",
            n,
            bad.cols()
        )));
    }

    let starts: Vec<(FactorPair<T>, T)> = us
        .par_iter()
        .zip(laps.par_iter())
        .map(|(u, lap)| {
            let pair = warm_start(u, lap, cfg)?;
            let c = step_constant(&pair.v, lap, cfg, true)?;
            Ok((pair, c))
        })
        .collect::<Result<_>>()?;
    let (subjects, steps): (Vec<_>, Vec<_>) = starts.into_iter().unzip();

    let kernels: Vec<IstaKernel<'_, T>> = us
        .iter()
        .zip(laps)
        .zip(subjects.iter().zip(&steps))
        .map(|((u, lap), (pair, &c))| IstaKernel::new(u, &pair.v, lap, cfg.ista_params(c, true)))
        .collect();

    let alpha = cfg.alpha.as_deref();
    let common = running_mean(subjects.iter().map(|p| p.w.as_array()), alpha)?;
    let mut model = JointModel {
        pairs: subjects,
        w_star: common,
        steps,
        objective_trace: Vec::with_capacity(cfg.outer_rounds),
    };

    for _ in 0..cfg.outer_rounds {
        let common = model.w_star.as_array();
        let ws: Vec<Array2<T>> = kernels
            .par_iter()
            .zip(model.pairs.par_iter())
            .map(|(kernel, pair)| {
                run_layers(
                    kernel,
                    pair.w.as_array().clone(),
                    Some(common),
                    cfg.ista_iters,
                    cfg.tol,
                    |_| {},
                )
                .map(|(w, _)| w)
            })
            .collect::<Result<_>>()?;
        for (pair, w) in model.pairs.iter_mut().zip(ws) {
            pair.w = NonNegMatrix::from_array_unchecked(w);
        }
        model.w_star = running_mean(model.pairs.iter().map(|p| p.w.as_array()), alpha)?;
        let f = objective_joint(us, laps, &model, cfg)?;
        model.objective_trace.push(f);
    }
    Ok(model)
}
