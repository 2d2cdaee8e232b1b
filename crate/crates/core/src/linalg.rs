//! Small dense symmetric eigen-solvers.
//!
//! `symmetric_eigen` is the Householder tridiagonalisation + implicit QL pair
//! (the EISPACK `tred2`/`tql2` routines) and is used for matrices up to a few
//! hundred rows. `top_eigenpairs_psd` runs block subspace iteration with a
//! Rayleigh-Ritz step for the leading eigenpairs of large PSD matrices, and
//! `largest_eigenvalue_psd` is plain power iteration.

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Scalar;

/// Eigenvalues in ascending order and matching unit eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T: Scalar> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<'_, T>) -> Result<SymmetricEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "eigendecomposition of a {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v = a.to_owned();
    // work on the symmetric part so slight asymmetry from rounding is harmless
    for i in 0..n {
        for j in 0..i {
            let m = (v[[i, j]] + v[[j, i]]) * T::lit(0.5);
            v[[i, j]] = m;
            v[[j, i]] = m;
        }
    }
    let mut d = Array1::zeros(n);
    let mut e = Array1::zeros(n);
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    Ok(SymmetricEigen {
        values: d,
        vectors: v,
    })
}

fn tred2<T: Scalar>(v: &mut Array2<T>, d: &mut Array1<T>, e: &mut Array1<T>) {
    let n = v.nrows();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
                v[[j, i]] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = zero;
            }

            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = zero;
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = zero;
}

fn tql2<T: Scalar>(v: &mut Array2<T>, d: &mut Array1<T>, e: &mut Array1<T>) -> Result<()> {
    const MAX_SWEEPS: usize = 64;
    let n = v.nrows();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::Numerical(
                        "tridiagonal QL iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }

    for i in 0..n - 1 {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                v.swap([row, i], [row, k]);
            }
        }
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, stopping once the Rayleigh quotient changes by less than
/// `rel_tol` relative to its magnitude.
pub fn largest_eigenvalue_psd<T: Scalar>(
    a: ArrayView2<'_, T>,
    rel_tol: T,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::zero();
    }
    let mut x: Array1<T> = (0..n).map(|_| T::lit(rng.random::<f64>() + 0.5)).collect();
    let norm = x.dot(&x).sqrt();
    x.mapv_inplace(|v| v / norm);
    let mut lambda = T::zero();
    for _ in 0..max_iter {
        let y = a.dot(&x);
        let next = x.dot(&y);
        let ny = y.dot(&y).sqrt();
        if ny == T::zero() {
            return T::zero();
        }
        x = y.mapv(|v| v / ny);
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// Orthonormalises the columns of `x` in place (modified Gram-Schmidt, two
/// passes). Columns that collapse numerically are replaced with fresh random
/// directions.
pub fn orthonormalize_columns<T: Scalar>(x: &mut Array2<T>, rng: &mut ChaCha8Rng) {
    let (n, b) = x.dim();
    for j in 0..b {
        let mut attempts = 0;
        loop {
            let before = norm(x.column(j).to_owned().view());
            for _pass in 0..2 {
                for i in 0..j {
                    let (qi, mut xj) = x.multi_slice_mut((s![.., i], s![.., j]));
                    let proj = qi.dot(&xj);
                    xj.scaled_add(-proj, &qi);
                }
            }
            let after = norm(x.column(j));
            if after > T::lit(1e-10) * before && after > T::min_positive_value() {
                x.column_mut(j).mapv_inplace(|v| v / after);
                break;
            }
            attempts += 1;
            assert!(attempts < 16 && j < n, "cannot extend orthonormal basis");
            for v in x.column_mut(j) {
                *v = T::lit(rng.random::<f64>() - 0.5);
            }
        }
    }
}

fn norm<T: Scalar>(v: ndarray::ArrayView1<'_, T>) -> T {
    v.dot(&v).sqrt()
}

/// Leading eigenpairs of a symmetric PSD matrix.
#[derive(Clone, Debug)]
pub struct LeadingEigen<T: Scalar> {
    /// Descending eigenvalues.
    pub values: Array1<T>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: Array2<T>,
    pub iterations: usize,
    pub residual: T,
}

/// The `count` largest eigenpairs of the symmetric PSD matrix `a` by block
/// subspace iteration with `extra` guard vectors. After the first
/// Rayleigh-Ritz step each sweep applies a degree-`CHEB_DEGREE` Chebyshev
/// filter that damps `[0, theta_block]`, the part of the spectrum below the
/// smallest Ritz value. Stops once every wanted Ritz pair has residual
/// `||a x - theta x|| <= tol`, or after `max_iter` sweeps.
pub fn top_eigenpairs_psd<T: Scalar>(
    a: ArrayView2<'_, T>,
    count: usize,
    extra: usize,
    tol: T,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LeadingEigen<T>> {
    let n = a.nrows();
    let count = count.min(n);
    let block = (count + extra).min(n);
    if block == n {
        // the whole space: one dense solve
        let eig = symmetric_eigen(a)?;
        let mut values = Array1::zeros(count);
        let mut vectors = Array2::zeros((n, count));
        for j in 0..count {
            values[j] = eig.values[n - 1 - j];
            vectors.column_mut(j).assign(&eig.vectors.column(n - 1 - j));
        }
        return Ok(LeadingEigen {
            values,
            vectors,
            iterations: 1,
            residual: T::zero(),
        });
    }

    let mut x = Array2::from_shape_fn((n, block), |_| T::lit(rng.random::<f64>() - 0.5));
    orthonormalize_columns(&mut x, rng);
    let mut residual = T::infinity();
    let mut theta = Array1::zeros(block);
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        if it > 1 {
            x = chebyshev_filter(a, &x, theta[block - 1]);
            orthonormalize_columns(&mut x, rng);
        }
        let mut z = a.dot(&x);
        let h = x.t().dot(&z);
        let eig = symmetric_eigen(h.view())?;
        // descending order
        let rot = eig.vectors.slice(s![.., ..;-1]).to_owned();
        theta = eig.values.slice(s![..;-1]).to_owned();
        x = x.dot(&rot);
        z = z.dot(&rot);
        residual = T::zero();
        for j in 0..count {
            let mut r = z.column(j).to_owned();
            r.scaled_add(-theta[j], &x.column(j));
            residual = residual.max(norm(r.view()));
        }
        if residual <= tol || !residual.is_finite() {
            break;
        }
    }
    if !residual.is_finite() {
        return Err(Error::Numerical("subspace iteration diverged".into()));
    }
    Ok(LeadingEigen {
        values: theta.slice(s![..count]).to_owned(),
        vectors: x.slice(s![.., ..count]).to_owned(),
        iterations,
        residual,
    })
}

const CHEB_DEGREE: usize = 8;

/// `T_d((2a - cut) / cut) x` by the three-term recurrence, rescaled each step
/// so the block stays representable.
fn chebyshev_filter<T: Scalar>(a: ArrayView2<'_, T>, x: &Array2<T>, cut: T) -> Array2<T> {
    let half = cut * T::lit(0.5);
    if !(half > T::zero()) {
        return a.dot(x);
    }
    let step = |y: &Array2<T>| (a.dot(y) - &y.mapv(|v| v * half)).mapv(|v| v / half);
    let mut prev = x.clone();
    let mut cur = step(x);
    for _ in 1..CHEB_DEGREE {
        let mut next = step(&cur).mapv(|v| v * T::lit(2.0)) - &prev;
        let scale = next.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if scale > T::zero() {
            next.mapv_inplace(|v| v / scale);
            cur.mapv_inplace(|v| v / scale);
        }
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_sorted_ascending() {
        let a = array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let e = symmetric_eigen(a.view()).unwrap();
        assert_eq!(e.values.to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let mut rng = Seed(3).rng(0);
        let n = 12;
        let b = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() - 0.5);
        let a = &b + &b.t();
        let e = symmetric_eigen(a.view()).unwrap();
        let lam = Array2::from_diag(&e.values);
        let rec = e.vectors.dot(&lam).dot(&e.vectors.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let gram = e.vectors.t().dot(&e.vectors);
        for ((i, j), v) in gram.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one() {
        let e = symmetric_eigen(array![[5.0f32]].view()).unwrap();
        assert_eq!(e.values[0], 5.0);
        assert_eq!(e.vectors[[0, 0]], 1.0);
    }

    #[test]
    fn power_iteration_finds_top() {
        let a = array![[2.0f64, 1.0], [1.0, 2.0]];
        let mut rng = Seed(0).rng(0);
        let l = largest_eigenvalue_psd(a.view(), 1e-12, 1000, &mut rng);
        assert!((l - 3.0).abs() < 1e-9);
    }

    #[test]
    fn subspace_matches_dense_with_repeated_eigenvalue() {
        // block structure gives a triple top eigenvalue
        let n = 30;
        let mut a = Array2::<f64>::zeros((n, n));
        for (lo, hi) in [(0, 10), (10, 20), (20, 30)] {
            for i in lo..hi {
                for j in lo..hi {
                    a[[i, j]] = 0.1;
                }
            }
        }
        for i in 0..n {
            a[[i, i]] += 0.01 * i as f64 / n as f64;
        }
        let mut rng = Seed(9).rng(0);
        let top = top_eigenpairs_psd(a.view(), 4, 4, 1e-10, 500, &mut rng).unwrap();
        let dense = symmetric_eigen(a.view()).unwrap();
        for j in 0..4 {
            assert!((top.values[j] - dense.values[n - 1 - j]).abs() < 1e-9);
        }
    }
}
