use ndarray::{Array2, ArrayView2};

use crate::graph::GraphLaplacian;
use crate::matrix::{Matrix, NonNegMatrix};
use crate::Scalar;

/// Weights of one ISTA layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IstaParams<T> {
    pub lambda: T,
    pub beta: T,
    pub gamma: T,
    pub c: T,
}

/// Pre-threshold iterate `S` of layer `h` (1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct IstaState<T: Scalar> {
    pub s: Matrix<T>,
    pub h: usize,
}

/// `sign(z) max(|z| - theta, 0)`.
#[inline]
pub fn soft_threshold<T: Scalar>(z: T, theta: T) -> T {
    let mag = (z.abs() - theta).max(T::zero());
    if z < T::zero() {
        -mag
    } else {
        mag
    }
}

#[inline]
fn rectified_threshold<T: Scalar>(z: T, theta: T) -> T {
    let v = soft_threshold(z, theta);
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Constant parts of an ISTA layer for one subject: `V^T U`, `V^T V`, `L`.
pub(crate) struct IstaKernel<'a, T: Scalar> {
    vtu: Array2<T>,
    vtv: Array2<T>,
    l: ArrayView2<'a, T>,
    params: IstaParams<T>,
}

impl<'a, T: Scalar> IstaKernel<'a, T> {
    pub(crate) fn new(
        u: &NonNegMatrix<T>,
        v: &NonNegMatrix<T>,
        lap: &'a GraphLaplacian<T>,
        params: IstaParams<T>,
    ) -> Self {
        let vt = v.as_array().t();
        IstaKernel {
            vtu: vt.dot(u.as_array()),
            vtv: vt.dot(v.as_array()),
            l: lap.l.view(),
            params,
        }
    }

    /// `S = W + (1/c)[V^T(U - V W) - gamma (W - W*)] - (beta/c) W L`.
    pub(crate) fn pre_threshold(&self, w: &Array2<T>, w_star: Option<&Array2<T>>) -> Array2<T> {
        let IstaParams { beta, gamma, c, .. } = self.params;
        let mut g = &self.vtu - &self.vtv.dot(w);
        if let Some(ws) = w_star {
            g.zip_mut_with(&(w - ws), |a, &d| *a -= gamma * d);
        }
        let mut s = w.clone();
        s.zip_mut_with(&g, |a, &b| *a += b / c);
        if beta > T::zero() {
            let wl = w.dot(&self.l);
            let k = beta / c;
            s.zip_mut_with(&wl, |a, &b| *a -= k * b);
        }
        s
    }

    pub(crate) fn threshold(&self, s: &Array2<T>) -> Array2<T> {
        let theta = self.params.lambda / self.params.c;
        s.mapv(|z| rectified_threshold(z, theta))
    }

    pub(crate) fn step(&self, w: &Array2<T>, w_star: Option<&Array2<T>>) -> Array2<T> {
        self.threshold(&self.pre_threshold(w, w_star))
    }
}

/// One ISTA layer: gradient step on the smooth terms followed by the
/// non-negative soft threshold at `lambda / c`. The consensus term is active
/// only when `w_star` is given.
pub fn ista_step<T: Scalar>(
    u: &NonNegMatrix<T>,
    v: &NonNegMatrix<T>,
    w_prev: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    params: IstaParams<T>,
    w_star: Option<&NonNegMatrix<T>>,
) -> NonNegMatrix<T> {
    ista_step_state(u, v, w_prev, lap, params, w_star, 1).1
}

/// Like [`ista_step`] but also returns the pre-threshold iterate.
pub fn ista_step_state<T: Scalar>(
    u: &NonNegMatrix<T>,
    v: &NonNegMatrix<T>,
    w_prev: &NonNegMatrix<T>,
    lap: &GraphLaplacian<T>,
    params: IstaParams<T>,
    w_star: Option<&NonNegMatrix<T>>,
    h: usize,
) -> (IstaState<T>, NonNegMatrix<T>) {
    let kernel = IstaKernel::new(u, v, lap, params);
    let s = kernel.pre_threshold(w_prev.as_array(), w_star.map(|m| m.as_array()));
    let w = NonNegMatrix::from_array_unchecked(kernel.threshold(&s));
    let s = Matrix::new(s).expect("finite ISTA iterate");
    (IstaState { s, h }, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_values() {
        assert!((soft_threshold(1.2, 0.5) - 0.7f64).abs() < 1e-15);
        assert_eq!(rectified_threshold(0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-1.0, 0.25), -0.75);
        for z in [-2.0, -0.1, 0.0, 0.4, 3.0] {
            assert_eq!(rectified_threshold(z, 0.0), f64::max(z, 0.0));
        }
    }

    #[test]
    fn exact_factorization_is_a_fixed_point_without_regularization() {
        let v = NonNegMatrix::new(array![[1.0, 0.5], [0.0, 2.0], [1.0, 1.0]]).unwrap();
        let w = NonNegMatrix::new(array![[0.5, 1.0, 0.0], [2.0, 0.0, 1.0]]).unwrap();
        let u = NonNegMatrix::new(v.as_array().dot(w.as_array())).unwrap();
        let lap = GraphLaplacian::empty(3);
        let p = IstaParams {
            lambda: 0.0,
            beta: 0.0,
            gamma: 0.0,
            c: 7.0,
        };
        let (state, out) = ista_step_state(&u, &v, &w, &lap, p, None, 1);
        assert_eq!(state.s.as_array(), w.as_array());
        assert_eq!(out, w);
    }

    #[test]
    fn hand_evaluated_two_by_two() {
        let u = NonNegMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let v = NonNegMatrix::new(array![[1.0], [0.0]]).unwrap();
        let w = NonNegMatrix::new(array![[1.0, 1.0]]).unwrap();
        let lap = GraphLaplacian::empty(2);
        let p = IstaParams {
            lambda: 1.0,
            beta: 0.0,
            gamma: 0.0,
            c: 1.0,
        };
        let (state, out) = ista_step_state(&u, &v, &w, &lap, p, None, 1);
        assert_eq!(state.s.as_array(), &array![[1.0, 0.0]]);
        assert_eq!(out.as_array(), &array![[0.0, 0.0]]);
    }
}
