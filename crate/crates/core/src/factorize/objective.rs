use ndarray::Array2;

use super::{JointModel, SolverConfig};
use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::linalg::{largest_eigenvalue_psd, symmetric_eigen};
use crate::matrix::NonNegMatrix;
use crate::rng::{stream, Seed};
use crate::Scalar;

fn sq_frobenius<T: Scalar>(a: &Array2<T>) -> T {
    a.iter().map(|x| *x * *x).sum()
}

/// `Tr(W L W^T)`.
fn graph_term<T: Scalar>(w: &Array2<T>, lap: &GraphLaplacian<T>) -> T {
    let wl = w.dot(lap.l.as_array());
    wl.iter().zip(w.iter()).map(|(a, b)| *a * *b).sum()
}

/// Differentiable part for one subject:
/// `1/2 ||U - VW||^2 + beta/2 Tr(W L W^T) + gamma/2 ||W - W*||^2`.
pub fn smooth_objective<T: Scalar>(
    u: &NonNegMatrix<T>,
    v: &NonNegMatrix<T>,
    w: &Array2<T>,
    lap: &GraphLaplacian<T>,
    beta: T,
    gamma: T,
    w_star: Option<&Array2<T>>,
) -> T {
    let half = T::lit(0.5);
    let r = u.as_array() - &v.as_array().dot(w);
    let mut f = half * sq_frobenius(&r);
    if beta != T::zero() {
        f += half * beta * graph_term(w, lap);
    }
    if let Some(ws) = w_star {
        f += half * gamma * sq_frobenius(&(w - ws));
    }
    f
}

/// Gradient of [`smooth_objective`] in `W`:
/// `-V^T (U - V W) + beta W L + gamma (W - W*)`.
pub fn smooth_gradient<T: Scalar>(
    u: &NonNegMatrix<T>,
    v: &NonNegMatrix<T>,
    w: &Array2<T>,
    lap: &GraphLaplacian<T>,
    beta: T,
    gamma: T,
    w_star: Option<&Array2<T>>,
) -> Array2<T> {
    let vt = v.as_array().t();
    let r = u.as_array() - &v.as_array().dot(w);
    let mut g = vt.dot(&r).mapv(|x| -x);
    if beta != T::zero() {
        g.scaled_add(beta, &w.dot(lap.l.as_array()));
    }
    if let Some(ws) = w_star {
        g.scaled_add(gamma, &(w - ws));
    }
    g
}

/// Single-subject objective including the `lambda ||W||_1` term.
pub fn objective_single<T: Scalar>(
    u: &NonNegMatrix<T>,
    v: &NonNegMatrix<T>,
    w: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    lambda: T,
    beta: T,
) -> T {
    let l1: T = w.iter().map(|x| x.abs()).sum();
    smooth_objective(u, v, w.as_array(), lap, beta, T::zero(), None) + lambda * l1
}

/// Joint objective: the sum of single-subject objectives plus
/// `gamma/2 sum_i ||W_i - W*||^2`.
pub fn objective_joint<T: Scalar>(
    us: &[NonNegMatrix<T>],
    laps: &[GraphLaplacian<T>],
    model: &JointModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    if us.len() != model.pairs.len() {
        return Err(Error::Length {
            left: us.len(),
            right: model.pairs.len(),
        });
    }
    if laps.len() != us.len() {
        return Err(Error::Length {
            left: us.len(),
            right: laps.len(),
        });
    }
    let half = T::lit(0.5);
    let mut total = T::zero();
    for ((u, lap), pair) in us.iter().zip(laps).zip(&model.pairs) {
        total += objective_single(u, &pair.v, &pair.w, lap, cfg.lambda, cfg.beta);
        total += half
            * cfg.gamma
            * sq_frobenius(&(pair.w.as_array() - model.w_star.as_array()));
    }
    Ok(total)
}

/// `c = ||V^T V||_2 + beta ||L||_2 + gamma`, the Lipschitz constant of the
/// smooth gradient. `||V^T V||` is computed exactly (it is `k x k`); `||L||` by
/// power iteration.
pub fn lipschitz_step<T: Scalar>(
    v: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    beta: T,
    gamma: T,
) -> Result<T> {
    let vtv = v.as_array().t().dot(v.as_array());
    let top = symmetric_eigen(vtv.view())?
        .values
        .iter()
        .copied()
        .fold(T::zero(), T::max);
    let mut c = top + gamma;
    if beta > T::zero() && lap.size() > 0 {
        let mut rng = Seed(0).rng(stream::POWER);
        let l_norm = largest_eigenvalue_psd(lap.l.view(), T::lit(1e-10), 1000, &mut rng);
        c += beta * l_norm;
    }
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::Degenerate(
            "step constant is zero: building blocks vanished".into(),
        ));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::laplacian_of;
    use ndarray::array;

    #[test]
    fn orthonormal_columns_give_unit_step() {
        let s = 0.5f64.sqrt();
        let v = NonNegMatrix::new(array![[s, 0.0], [s, 0.0], [0.0, 1.0]]).unwrap();
        let c = lipschitz_step(&v, &GraphLaplacian::empty(4), 0.0, 0.0).unwrap();
        assert!((c - 1.0f64).abs() < 1e-12);
        let c = lipschitz_step(&v, &GraphLaplacian::empty(4), 0.0, 3.0).unwrap();
        assert!((c - 4.0).abs() < 1e-12);
    }

    #[test]
    fn graph_term_enters_step() {
        let v = NonNegMatrix::new(array![[1.0]]).unwrap();
        let lap = laplacian_of(array![[0.0, 1.0], [1.0, 0.0]].view());
        let c = lipschitz_step(&v, &lap, 0.5, 0.0).unwrap();
        assert!((c - 2.0f64).abs() < 1e-8);
    }

    #[test]
    fn zero_blocks_are_degenerate() {
        let v = NonNegMatrix::<f64>::zeros(3, 2);
        assert!(matches!(
            lipschitz_step(&v, &GraphLaplacian::empty(2), 0.0, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn objective_of_exact_fit_is_penalty_only() {
        let v = NonNegMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let w = NonNegMatrix::new(array![[1.0, 2.0], [0.0, 3.0]]).unwrap();
        let u = NonNegMatrix::new(v.as_array().dot(w.as_array())).unwrap();
        let lap = laplacian_of(array![[0.0, 1.0], [1.0, 0.0]].view());
        // Tr(W L W^T) = (1-2)^2 + (0-3)^2 = 10
        let f = objective_single(&u, &v, &w, &lap, 0.5, 2.0);
        assert!((f - (0.5 * 6.0 + 10.0f64)).abs() < 1e-12);
    }
}
