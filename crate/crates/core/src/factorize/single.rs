use ndarray::Array2;

use super::ista::IstaKernel;
use super::{init_gnmf, lipschitz_step, normalize_building_blocks, objective_single};
use super::{FactorPair, SolverConfig, StepSize};
use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::matrix::NonNegMatrix;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SingleFit<T: Scalar> {
    pub factors: FactorPair<T>,
    /// Step constant `c` used by every layer.
    pub step: T,
    /// Objective at the warm start followed by its value after each layer.
    pub objective_trace: Vec<T>,
    /// Layers actually run (fewer than `H` only with a tolerance).
    pub layers: usize,
}

/// Warm start with unit-norm building blocks.
pub(crate) fn warm_start<T: Scalar>(
    u: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    cfg: &SolverConfig<T>,
) -> Result<FactorPair<T>> {
    let pair = init_gnmf(u, cfg.k, lap, cfg.beta, cfg.init_iters, cfg.seed)?;
    Ok(normalize_building_blocks(pair))
}

pub(crate) fn step_constant<T: Scalar>(
    v: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    cfg: &SolverConfig<T>,
    coupled: bool,
) -> Result<T> {
    match cfg.step {
        StepSize::Fixed(c) => Ok(c),
        StepSize::Auto => {
            let gamma = if coupled { cfg.gamma } else { T::zero() };
            lipschitz_step(v, lap, cfg.beta, gamma)
        }
    }
}

/// Runs up to `h` layers from `w`, calling `observe` after each one.
pub(crate) fn run_layers<T: Scalar>(
    kernel: &IstaKernel<'_, T>,
    mut w: Array2<T>,
    w_star: Option<&Array2<T>>,
    h: usize,
    tol: Option<T>,
    mut observe: impl FnMut(&Array2<T>),
) -> Result<(Array2<T>, usize)> {
    let mut done = 0;
    for _ in 0..h {
        let next = kernel.step(&w, w_star);
        done += 1;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite weighting map after layer {done}")));
        }
        observe(&next);
        let converged = tol.is_some_and(|tol| {
            let diff: T = next.iter().zip(w.iter()).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            let base: T = w.iter().map(|x| *x * *x).sum();
            diff.sqrt() <= tol * base.sqrt()
        });
        w = next;
        if converged {
            break;
        }
    }
    Ok((w, done))
}

/// Single-subject solve: warm start, then `H` ISTA layers on `W` with `V`
/// fixed.
pub fn solve_single<T: Scalar>(
    u: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    cfg: &SolverConfig<T>,
) -> Result<SingleFit<T>> {
    cfg.validate()?;
    let FactorPair { v, w } = warm_start(u, lap, cfg)?;
    let c = step_constant(&v, lap, cfg, false)?;
    let kernel = IstaKernel::new(u, &v, lap, cfg.ista_params(c, false));

    let mut trace = vec![objective_single(u, &v, &w, lap, cfg.lambda, cfg.beta)];
    let (w, layers) = run_layers(&kernel, w.into_array(), None, cfg.ista_iters, cfg.tol, |w| {
        let w = NonNegMatrix::from_array_unchecked(w.clone());
        trace.push(objective_single(u, &v, &w, lap, cfg.lambda, cfg.beta));
    })?;

    Ok(SingleFit {
        factors: FactorPair {
            v,
            w: NonNegMatrix::from_array_unchecked(w),
        },
        step: c,
        objective_trace: trace,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{knn_heat_affinity, laplacian};
    use crate::rng::Seed;
    use rand::Rng;

    fn random_u(seed: u64, m: usize, n: usize) -> NonNegMatrix<f64> {
        let mut rng = Seed(seed).rng(77);
        NonNegMatrix::new(Array2::from_shape_simple_fn((m, n), || rng.random::<f64>())).unwrap()
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..5 {
            let u = random_u(seed, 12, 20);
            let lap = laplacian(&knn_heat_affinity(&u, 4, None).unwrap());
            let mut cfg = SolverConfig::new(3);
            cfg.lambda = 0.05;
            cfg.beta = 0.5;
            cfg.ista_iters = 30;
            cfg.init_iters = 5;
            cfg.seed = Seed(seed);
            let fit = solve_single(&u, &lap, &cfg).unwrap();
            assert_eq!(fit.objective_trace.len(), 31);
            for pair in fit.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9 * (1.0 + pair[0].abs()));
            }
            assert!(fit.factors.w.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn tolerance_stops_early() {
        let u = random_u(3, 10, 15);
        let lap = GraphLaplacian::empty(15);
        let mut cfg = SolverConfig::new(2);
        cfg.ista_iters = 500;
        cfg.tol = Some(1e-3);
        let fit = solve_single(&u, &lap, &cfg).unwrap();
        assert!(fit.layers < 500);
        assert_eq!(fit.objective_trace.len(), fit.layers + 1);
    }

    #[test]
    fn huge_lambda_zeroes_weights() {
        let u = random_u(4, 6, 8);
        let lap = GraphLaplacian::empty(8);
        let mut cfg = SolverConfig::new(2);
        cfg.lambda = 1e6;
        cfg.ista_iters = 1;
        let fit = solve_single(&u, &lap, &cfg).unwrap();
        assert!(fit.factors.w.iter().all(|x| *x == 0.0));
    }
}
