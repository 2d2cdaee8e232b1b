//! Affinity from a weighting map and normalized spectral clustering.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::pairwise_sq_distances;
use crate::linalg::{symmetric_eigen, top_eigenpairs_psd};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::rng::{stream, Seed};
use crate::Scalar;

/// Default number of k-means restarts.
pub const DEFAULT_RESTARTS: usize = 20;
/// Lloyd iterations per k-means run.
pub const KMEANS_MAX_ITER: usize = 300;
/// Stop Lloyd once inertia changes by less than this.
pub const KMEANS_TOL: f64 = 1e-10;
/// Above this size the embedding comes from subspace iteration instead of a
/// dense eigendecomposition.
pub const DENSE_EIGEN_LIMIT: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// One label in `1..=k` per point.
    pub labels: Vec<usize>,
    pub k: usize,
    /// `lambda_{K+1} - lambda_K` of the normalized Laplacian; `None` when
    /// `K = n`.
    pub eigengap: Option<f64>,
    /// Smallest `min(K+1, n)` eigenvalues of the normalized Laplacian,
    /// ascending.
    pub eigenvalues: Vec<f64>,
    /// k-means inertia on the normalized embedding.
    pub inertia: f64,
}

impl ClusterAssignment {
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l - 1] += 1;
        }
        counts
    }
}

/// `A(i, j) = exp(-||w_i - w_j|| / sigma)` over the columns of `w`.
pub fn weighting_affinity<T: Scalar>(w: &NonNegMatrix<T>, sigma: T) -> Result<Matrix<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::Config("sigma must be positive".into()));
    }
    let mut a = pairwise_sq_distances(w.view());
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] = T::one();
        for j in (i + 1)..n {
            let v = (-a[[i, j]].sqrt() / sigma).exp();
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    Matrix::new(a)
}

/// Median Euclidean distance between distinct columns; fallback bandwidth
/// when none is configured.
pub fn median_column_distance<T: Scalar>(w: &NonNegMatrix<T>) -> T {
    let d2 = pairwise_sq_distances(w.view());
    let n = d2.nrows();
    let mut d: Vec<T> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(d2[[i, j]].sqrt());
        }
    }
    if d.is_empty() {
        return T::one();
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite"));
    if *m > T::zero() {
        *m
    } else {
        T::one()
    }
}

/// Normalized-cuts clustering of a symmetric non-negative affinity.
///
/// The embedding is the eigenvectors of the `K` smallest eigenvalues of
/// `I - D^{-1/2} A D^{-1/2}`, rows scaled to unit length, then k-means.
/// Labels are numbered by first appearance.
pub fn spectral_cluster<T: Scalar>(
    a: ArrayView2<'_, T>,
    k: usize,
    seed: Seed,
) -> Result<ClusterAssignment> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("affinity is {}x{}", n, a.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("cluster count {k} must lie in 1..={n}")));
    }
    for i in 0..n {
        for j in 0..i {
            if a[[i, j]] < T::zero() || a[[i, j]] != a[[j, i]] {
                return Err(Error::Config(
                    "affinity must be symmetric and non-negative".into(),
                ));
            }
        }
    }
    let degree = a.sum_axis(Axis(1));
    if let Some(i) = degree.iter().position(|d| !(*d > T::zero())) {
        return Err(Error::Degenerate(format!("point {i} has no affinity to any point")));
    }
    let inv_sqrt = degree.mapv(|d| T::one() / d.sqrt());
    // M = D^{-1/2} A D^{-1/2}; the Laplacian is I - M
    let m = Array2::from_shape_fn((n, n), |(i, j)| inv_sqrt[i] * a[[i, j]] * inv_sqrt[j]);

    let wanted = (k + 1).min(n);
    let mut rng = seed.rng(stream::SPECTRAL);
    let (eigenvalues, vectors) = if n <= DENSE_EIGEN_LIMIT {
        let eig = symmetric_eigen(m.view())?;
        let vals: Vec<f64> = (0..wanted).map(|j| 1.0 - eig.values[n - 1 - j].as_f64()).collect();
        let mut vecs = Array2::zeros((n, k));
        for j in 0..k {
            vecs.column_mut(j).assign(&eig.vectors.column(n - 1 - j));
        }
        (vals, vecs)
    } else {
        // B = (I + M) / 2 is PSD with the same eigenvectors
        let mut b = m.mapv(|x| x * T::lit(0.5));
        for i in 0..n {
            b[[i, i]] += T::lit(0.5);
        }
        let top = top_eigenpairs_psd(b.view(), wanted, 10, T::lit(1e-9), 100, &mut rng)?;
        let vals: Vec<f64> = top.values.iter().map(|t| 2.0 - 2.0 * t.as_f64()).collect();
        (vals, top.vectors.slice(ndarray::s![.., ..k]).to_owned())
    };

    let mut x = vectors;
    for mut row in x.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > T::zero() {
            row.mapv_inplace(|v| v / norm);
        }
    }
    let km = kmeans_with_rng(x.view(), k, DEFAULT_RESTARTS, &mut rng);
    let eigengap = (wanted > k).then(|| eigenvalues[k] - eigenvalues[k - 1]);
    Ok(ClusterAssignment {
        labels: renumber_by_first_appearance(&km.labels),
        k,
        eigengap,
        eigenvalues,
        inertia: km.inertia,
    })
}

/// Spectral clustering of the columns of a weighting map.
pub fn cluster_weighting_map<T: Scalar>(
    w: &NonNegMatrix<T>,
    sigma: T,
    k: usize,
    seed: Seed,
) -> Result<ClusterAssignment> {
    let a = weighting_affinity(w, sigma)?;
    spectral_cluster(a.view(), k, seed)
}

fn renumber_by_first_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    /// 0-based cluster index per row.
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
}

/// k-means++ seeded Lloyd iterations, best of `restarts` runs by inertia.
pub fn kmeans<T: Scalar>(x: ArrayView2<'_, T>, k: usize, seed: Seed, restarts: usize) -> Result<KMeans> {
    if k == 0 || k > x.nrows() {
        return Err(Error::Config(format!(
            "cluster count {k} must lie in 1..={}",
            x.nrows()
        )));
    }
    let mut rng = seed.rng(stream::KMEANS);
    Ok(kmeans_with_rng(x, k, restarts, &mut rng))
}

fn kmeans_with_rng<T: Scalar>(
    x: ArrayView2<'_, T>,
    k: usize,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> KMeans {
    let x = x.mapv(|v| v.as_f64());
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(&x, plus_plus(&x, k, rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn plus_plus(x: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, x.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centers.row(c)));
        }
    }
    centers
}

fn assign(x: &Array2<f64>, centers: &Array2<f64>, labels: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, center) in centers.rows().into_iter().enumerate() {
            let d = sq_dist(row, center);
            if d < best.1 {
                best = (c, d);
            }
        }
        labels[i] = best.0;
        dist[i] = best.1;
        inertia += best.1;
    }
    inertia
}

fn lloyd(x: &Array2<f64>, mut centers: Array2<f64>) -> KMeans {
    let (n, dim) = x.dim();
    let k = centers.nrows();
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut inertia = assign(x, &centers, &mut labels, &mut dist);
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &x.row(i));
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            } else {
                // re-seed from the point farthest from its current center
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("non-empty");
                centers.row_mut(c).assign(&x.row(far));
                dist[far] = 0.0;
            }
        }
        let next = assign(x, &centers, &mut labels, &mut dist);
        let change = (inertia - next).abs();
        inertia = next;
        if change < KMEANS_TOL {
            break;
        }
    }
    KMeans {
        labels,
        centers,
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn blocks(sizes: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let truth: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b + 1, s))
            .collect();
        let n = truth.len();
        let a = Array2::from_shape_fn((n, n), |(i, j)| if truth[i] == truth[j] { 1.0 } else { 0.0 });
        (a, truth)
    }

    #[test]
    fn affinity_values() {
        let w = NonNegMatrix::new(array![[0.0, 0.0, 3.0], [1.0, 1.0, 5.0]]).unwrap();
        let a = weighting_affinity(&w, 5.0).unwrap();
        assert_eq!(a[[0, 1]], 1.0);
        assert_eq!(a[[2, 2]], 1.0);
        assert!((a[[0, 2]] - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(a[[0, 2]], a[[2, 0]]);
        assert!(weighting_affinity(&w, 0.0).is_err());
    }

    #[test]
    fn planted_blocks_recovered() {
        let (a, truth) = blocks(&[10, 15, 20]);
        let c = spectral_cluster(a.view(), 3, Seed(1)).unwrap();
        assert_eq!(c.labels, truth);
        let gap = c.eigengap.unwrap();
        assert!((gap - 1.0).abs() < 1e-8, "gap {gap}");
    }

    #[test]
    fn one_cluster_and_singletons() {
        let (a, _) = blocks(&[4, 3]);
        let c = spectral_cluster(a.view(), 1, Seed(0)).unwrap();
        assert!(c.labels.iter().all(|&l| l == 1));
        let w = NonNegMatrix::new(array![[0.0, 1.0, 2.0, 3.0]]).unwrap();
        let a = weighting_affinity(&w, 1.0).unwrap();
        let c = spectral_cluster(a.view(), 4, Seed(0)).unwrap();
        assert_eq!(c.labels, vec![1, 2, 3, 4]);
        assert_eq!(c.eigengap, None);
    }

    #[test]
    fn isolated_point_is_degenerate() {
        let a = array![[0.0, 0.0], [0.0, 1.0]];
        assert!(matches!(spectral_cluster(a.view(), 1, Seed(0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kmeans_separates_and_handles_identical_points() {
        let x = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0]];
        let r = kmeans(x.view(), 2, Seed(3), 20).unwrap();
        assert_eq!(renumber_by_first_appearance(&r.labels), vec![1, 1, 1, 2, 2]);
        let same = Array2::<f64>::ones((6, 2));
        let r = kmeans(same.view(), 2, Seed(3), 5).unwrap();
        assert!(r.labels.iter().all(|&l| l < 2));
        assert_eq!(r.inertia, 0.0);
        let again = kmeans(same.view(), 2, Seed(3), 5).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn subspace_path_matches_planted_blocks() {
        let (a, truth) = blocks(&[150, 200, 170]);
        let c = spectral_cluster(a.view(), 3, Seed(2)).unwrap();
        assert_eq!(c.labels, truth);
        assert!(c.eigenvalues.iter().all(|&v| (-1e-8..=2.0 + 1e-8).contains(&v)));
    }
}
