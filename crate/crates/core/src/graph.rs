//! Nearest-neighbour heat-kernel graph over the columns of a feature matrix
//! and its Laplacian `L = D - Q`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray::parallel::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::Scalar;

/// Default neighbourhood size.
pub const DEFAULT_NEIGHBORS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct AffinityGraph<T: Scalar> {
    /// Symmetric, zero diagonal, entries in `[0, 1]`.
    pub q: NonNegMatrix<T>,
    pub neighbor_count: usize,
    pub bandwidth: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphLaplacian<T: Scalar> {
    pub l: Matrix<T>,
    pub degree: Array1<T>,
}

impl<T: Scalar> GraphLaplacian<T> {
    pub fn size(&self) -> usize {
        self.degree.len()
    }

    /// Laplacian of the empty graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        GraphLaplacian {
            l: Matrix::zeros(n, n),
            degree: Array1::zeros(n),
        }
    }

    /// The affinity `Q = D - L`.
    pub fn affinity(&self) -> Array2<T> {
        let mut q = self.l.as_array().mapv(|v| -v);
        for (i, d) in self.degree.iter().enumerate() {
            q[[i, i]] = *d - self.l[[i, i]];
        }
        q
    }
}

/// Squared Euclidean distances between the columns of `u`.
pub fn pairwise_sq_distances<T: Scalar>(u: ArrayView2<'_, T>) -> Array2<T> {
    let n = u.ncols();
    // rows of `pts` are the columns of `u`, contiguous
    let pts = u.t().as_standard_layout().to_owned();
    let mut d2 = Array2::zeros((n, n));
    d2.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let a = pts.row(i);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let b = pts.row(j);
                let mut acc = T::zero();
                for (x, y) in a.iter().zip(b.iter()) {
                    let d = *x - *y;
                    acc += d * d;
                }
                row[j] = acc;
            }
        });
    d2
}

/// Indices of the `count` nearest other columns for row `i` of `d2`; ties go
/// to the lower index.
fn nearest_columns<T: Scalar>(d2: ArrayView2<'_, T>, i: usize, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d2.ncols()).filter(|&j| j != i).collect();
    let cmp = |a: &usize, b: &usize| {
        d2[[i, *a]]
            .partial_cmp(&d2[[i, *b]])
            .expect("finite distances")
            .then(a.cmp(b))
    };
    if count < idx.len() {
        idx.select_nth_unstable_by(count, cmp);
        idx.truncate(count);
    }
    idx.sort_by(cmp);
    idx
}

/// Heat-kernel affinity on the symmetrized `neighbors`-nearest-neighbour graph
/// of the columns of `u`.
///
/// `bandwidth = None` uses the mean Euclidean length of the kept edges.
pub fn knn_heat_affinity<T: Scalar>(
    u: &NonNegMatrix<T>,
    neighbors: usize,
    bandwidth: Option<T>,
) -> Result<AffinityGraph<T>> {
    let n = u.cols();
    if n < 2 {
        return Err(Error::Config(format!("affinity graph needs at least 2 points, got {n}")));
    }
    if neighbors == 0 {
        return Err(Error::Config("neighbour count must be at least 1".into()));
    }
    if let Some(t) = bandwidth {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::Config("heat-kernel bandwidth must be positive".into()));
        }
    }
    let d2 = pairwise_sq_distances(u.view());
    let k = neighbors.min(n - 1);

    let mut keep = Array2::from_elem((n, n), false);
    for i in 0..n {
        for j in nearest_columns(d2.view(), i, k) {
            keep[[i, j]] = true;
            keep[[j, i]] = true;
        }
    }

    let t = match bandwidth {
        Some(t) => t,
        None => {
            let mut sum = T::zero();
            let mut count = 0usize;
            for i in 0..n {
                for j in (i + 1)..n {
                    if keep[[i, j]] {
                        sum += d2[[i, j]].sqrt();
                        count += 1;
                    }
                }
            }
            let mean = sum / T::from_count(count);
            if mean > T::zero() {
                mean
            } else {
                T::one()
            }
        }
    };

    let two_t2 = T::lit(2.0) * t * t;
    let q = Array2::from_shape_fn((n, n), |(i, j)| {
        if i != j && keep[[i, j]] {
            (-d2[[i, j]] / two_t2).exp()
        } else {
            T::zero()
        }
    });
    Ok(AffinityGraph {
        q: NonNegMatrix::new(q)?,
        neighbor_count: neighbors,
        bandwidth: t,
    })
}

/// `L = D - Q` with `D` the diagonal of row sums of `Q`.
pub fn laplacian<T: Scalar>(g: &AffinityGraph<T>) -> GraphLaplacian<T> {
    laplacian_of(g.q.view())
}

pub fn laplacian_of<T: Scalar>(q: ArrayView2<'_, T>) -> GraphLaplacian<T> {
    let degree = q.sum_axis(Axis(1));
    let mut l = q.mapv(|v| -v);
    for (i, d) in degree.iter().enumerate() {
        l[[i, i]] = *d - q[[i, i]];
    }
    GraphLaplacian {
        l: Matrix::new(l).expect("finite affinity gives finite Laplacian"),
        degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_columns_have_unit_affinity() {
        let u = NonNegMatrix::new(array![[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let g = knn_heat_affinity(&u, 1, Some(0.5)).unwrap();
        assert_eq!(g.q[[0, 1]], 1.0);
        assert_eq!(g.q[[0, 0]], 0.0);
    }

    #[test]
    fn distance_t_sqrt2_gives_inverse_e() {
        let t = 0.7;
        let d = t * 2f64.sqrt();
        let u = NonNegMatrix::new(array![[0.0, d]]).unwrap();
        let g = knn_heat_affinity(&u, 1, Some(t)).unwrap();
        assert!((g.q[[0, 1]] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn two_node_laplacian() {
        let l = laplacian_of(array![[0.0, 1.0], [1.0, 0.0]].view());
        assert_eq!(l.l.as_array(), &array![[1.0, -1.0], [-1.0, 1.0]]);
        let z = laplacian_of(Array2::<f64>::zeros((3, 3)).view());
        assert!(z.l.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ties_go_to_lower_index() {
        // columns 1, 2, 3 all at distance 1 from column 0
        let u = NonNegMatrix::new(array![[1.0, 0.0, 2.0, 1.0], [1.0, 1.0, 1.0, 0.0]]).unwrap();
        let d2 = pairwise_sq_distances(u.view());
        assert_eq!(nearest_columns(d2.view(), 0, 2), vec![1, 2]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let u = NonNegMatrix::new(array![[1.0, 2.0]]).unwrap();
        assert!(knn_heat_affinity(&u, 0, None).is_err());
        assert!(knn_heat_affinity(&u, 1, Some(0.0)).is_err());
        let one = NonNegMatrix::new(array![[1.0]]).unwrap();
        assert!(knn_heat_affinity(&one, 1, None).is_err());
    }

    #[test]
    fn affinity_round_trips_through_laplacian() {
        let q = array![[0.0, 0.5, 0.0], [0.5, 0.0, 0.25], [0.0, 0.25, 0.0]];
        let l = laplacian_of(q.view());
        assert_eq!(l.affinity(), q);
    }
}
