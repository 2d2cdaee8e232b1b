//! Clustering accuracy under the best label mapping, normalized mutual
//! information, and unit-size statistics across subjects.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `perm` with row `i` assigned to column `perm[i]`. Among optimal
/// assignments the lexicographically smallest `perm` is returned.
pub fn hungarian(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::Shape(format!("cost matrix is {}x{}", n, cost.ncols())));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Config("cost matrix must be finite".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (best, _) = kuhn_munkres(cost, &vec![true; n], &vec![true; n]);
    let tol = 1e-12 * (1.0 + best.abs());

    // fix rows in order to the smallest column that still admits the optimum
    let mut free_rows = vec![true; n];
    let mut free_cols = vec![true; n];
    let mut fixed = 0.0;
    let mut perm = vec![0; n];
    for r in 0..n {
        free_rows[r] = false;
        for c in 0..n {
            if !free_cols[c] {
                continue;
            }
            free_cols[c] = false;
            let (rest, _) = kuhn_munkres(cost, &free_rows, &free_cols);
            if fixed + cost[[r, c]] + rest <= best + tol {
                perm[r] = c;
                fixed += cost[[r, c]];
                break;
            }
            free_cols[c] = true;
        }
    }
    Ok(perm)
}

/// Optimal cost of the assignment problem restricted to the free rows and
/// columns (equal in number), with potentials; returns `(cost, perm)` where
/// `perm` maps free rows to columns.
fn kuhn_munkres(cost: &Array2<f64>, rows: &[bool], cols: &[bool]) -> (f64, Vec<usize>) {
    let ri: Vec<usize> = (0..rows.len()).filter(|&i| rows[i]).collect();
    let ci: Vec<usize> = (0..cols.len()).filter(|&j| cols[j]).collect();
    let n = ri.len();
    debug_assert_eq!(n, ci.len());
    if n == 0 {
        return (0.0, Vec::new());
    }
    let a = |i: usize, j: usize| cost[[ri[i - 1], ci[j - 1]]];
    // 1-based potentials formulation; p[j] is the row matched to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = ci[j - 1];
    }
    let total = perm.iter().enumerate().map(|(i, &c)| cost[[ri[i], c]]).sum();
    (total, perm)
}

/// Counts of co-occurring labels; rows follow `a`, columns `b`, both in
/// ascending label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub counts: Vec<Vec<usize>>,
}

impl Contingency {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Length {
                left: a.len(),
                right: b.len(),
            });
        }
        if a.is_empty() {
            return Err(Error::Config("labelings must not be empty".into()));
        }
        let index = |xs: &[usize]| -> BTreeMap<usize, usize> {
            let mut m: BTreeMap<usize, usize> = xs.iter().map(|&x| (x, 0)).collect();
            for (i, v) in m.values_mut().enumerate() {
                *v = i;
            }
            m
        };
        let (ia, ib) = (index(a), index(b));
        let mut counts = vec![vec![0; ib.len()]; ia.len()];
        for (x, y) in a.iter().zip(b) {
            counts[ia[x]][ib[y]] += 1;
        }
        Ok(Contingency {
            row_labels: ia.into_keys().collect(),
            col_labels: ib.into_keys().collect(),
            counts,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Best matching of rows to columns on the zero-padded square table, as
    /// `(row, col)` index pairs with a real row and column.
    pub fn best_matching(&self) -> Vec<(usize, usize)> {
        let (r, c) = (self.row_labels.len(), self.col_labels.len());
        let size = r.max(c);
        let cost = Array2::from_shape_fn((size, size), |(i, j)| {
            if i < r && j < c {
                -(self.counts[i][j] as f64)
            } else {
                0.0
            }
        });
        let perm = hungarian(&cost).expect("square finite cost");
        perm.into_iter()
            .enumerate()
            .filter(|&(i, j)| i < r && j < c)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.col_labels {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (l, row) in self.row_labels.iter().zip(&self.counts) {
            out.push_str(&l.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Percentage of points whose predicted label maps to their true label under
/// the best one-to-one mapping.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = Contingency::new(pred, truth)?;
    let matches: usize = t.best_matching().iter().map(|&(i, j)| t.counts[i][j]).sum();
    Ok(100.0 * matches as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Mutual information in bits.
pub fn mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    Ok(mi_of(&t))
}

fn mi_of(t: &Contingency) -> f64 {
    let n = t.total() as f64;
    let rows: Vec<usize> = t.counts.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..t.col_labels.len())
        .map(|j| t.counts.iter().map(|r| r[j]).sum())
        .collect();
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pab = c as f64 / n;
                let pa = rows[i] as f64 / n;
                let pb = cols[j] as f64 / n;
                mi += pab * (pab / (pa * pb)).log2();
            }
        }
    }
    mi
}

/// `100 MI / max(H(a), H(b))`.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let n = a.len() as f64;
    let ha = entropy(t.counts.iter().map(|r| r.iter().sum()), n);
    let hb = entropy(
        (0..t.col_labels.len()).map(|j| t.counts.iter().map(|r| r[j]).sum()),
        n,
    );
    let h = ha.max(hb);
    if h == 0.0 {
        // both labelings put every point in one cluster
        return Ok(100.0);
    }
    Ok((100.0 * mi_of(&t) / h).clamp(0.0, 100.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSizeStats {
    /// Mean unit size in percent of points, indexed by common label - 1.
    pub mean: Vec<f64>,
    /// Population standard deviation, same indexing.
    pub std: Vec<f64>,
}

/// Per-unit size statistics across subjects after aligning each subject's
/// labels to the common labels.
pub fn unit_size_stats(
    assignments: &[ClusterAssignment],
    aligned_to: &ClusterAssignment,
) -> Result<UnitSizeStats> {
    let n = aligned_to.labels.len();
    let k = aligned_to.k;
    if assignments.is_empty() {
        return Err(Error::Shape("no subject assignments".into()));
    }
    let mut sizes = vec![Vec::with_capacity(assignments.len()); k];
    for s in assignments {
        if s.labels.len() != n || s.k != k {
            return Err(Error::Shape(format!(
                "subject has {} points and K = {}, common has {} and K = {}",
                s.labels.len(),
                s.k,
                n,
                k
            )));
        }
        // full 1..=K tables so that empty units still get a slot
        let mut counts = vec![vec![0usize; k]; k];
        for (&a, &b) in s.labels.iter().zip(&aligned_to.labels) {
            counts[a - 1][b - 1] += 1;
        }
        let table = Contingency {
            row_labels: (1..=k).collect(),
            col_labels: (1..=k).collect(),
            counts,
        };
        let mut mapped = vec![0usize; k];
        let per_label = s.label_counts();
        for (i, j) in table.best_matching() {
            mapped[j] = per_label[i];
        }
        for (u, &c) in mapped.iter().enumerate() {
            sizes[u].push(100.0 * c as f64 / n as f64);
        }
    }
    let (mut mean, mut std) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for s in &sizes {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / s.len() as f64;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(UnitSizeStats { mean, std })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ac: f64,
    pub nmi: f64,
    pub contingency: Contingency,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_size_stats: Option<UnitSizeStats>,
}

impl MetricsReport {
    pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Self> {
        Ok(MetricsReport {
            ac: accuracy(pred, truth)?,
            nmi: nmi(pred, truth)?,
            contingency: Contingency::new(pred, truth)?,
            unit_size_stats: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hungarian_small_cases() {
        assert_eq!(hungarian(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap(), vec![0, 1]);
        assert_eq!(hungarian(&array![[5.0, 1.0], [1.0, 5.0]]).unwrap(), vec![1, 0]);
        assert_eq!(hungarian(&Array2::from_elem((4, 4), 2.0)).unwrap(), vec![0, 1, 2, 3]);
        // two optima: (0,2),(1,0),(2,1) and (0,2),(1,1),(2,0) both cost 2
        let c = array![[1.0, 1.0, 0.0], [1.0, 1.0, 5.0], [1.0, 1.0, 5.0]];
        assert_eq!(hungarian(&c).unwrap(), vec![2, 0, 1]);
        assert!(hungarian(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 1, 2, 2], &[2, 2, 1, 1]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 2, 2, 2], &[1, 1, 2, 2]).unwrap(), 75.0);
        // unequal label counts
        assert_eq!(accuracy(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 50.0);
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(Error::Length { .. })));
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[1, 1, 2, 2], &[5, 5, 7, 7]).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(nmi(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.0);
        assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 100.0);
    }

    #[test]
    fn unit_sizes_two_point_formula() {
        let mk = |labels: Vec<usize>| ClusterAssignment {
            k: 2,
            labels,
            eigengap: None,
            eigenvalues: vec![],
            inertia: 0.0,
        };
        let common = mk(vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2]);
        let a = mk(vec![1, 1, 1, 1, 2, 2, 2, 2, 2, 2]);
        // labels swapped relative to common, unit 1 has 6 points
        let b = mk(vec![2, 2, 2, 2, 2, 2, 1, 1, 1, 1]);
        let s = unit_size_stats(&[a, b], &common).unwrap();
        assert!((s.mean[0] - 50.0).abs() < 1e-12);
        assert!((s.std[0] - 10.0).abs() < 1e-12);
        let same = unit_size_stats(&[common.clone(), common.clone()], &common).unwrap();
        assert_eq!(same.std, vec![0.0, 0.0]);
        assert!(unit_size_stats(&[mk(vec![1, 2])], &common).is_err());
    }

    #[test]
    fn contingency_csv() {
        let t = Contingency::new(&[1, 1, 2], &[3, 4, 4]).unwrap();
        assert_eq!(t.to_csv(), "label,3,4\n1,1,1\n2,0,1\n");
        assert_eq!(t.total(), 3);
    }
}
