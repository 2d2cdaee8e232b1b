//! Dense matrices with validated contents.
//!
//! [`Matrix`] guarantees every entry is finite; [`NonNegMatrix`] additionally
//! guarantees every entry is non-negative. Both are immutable views over an
//! `ndarray::Array2` once built, so they can be shared freely across threads.

use std::ops::Deref;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Scalar> {
    data: Array2<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Wraps `data`, rejecting NaN and infinite entries.
    pub fn new(data: Array2<T>) -> Result<Self> {
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Matrix { data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            data: Array2::zeros((rows, cols)),
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), entries)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(data)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::Shape(format!(
                "row of length {} in a matrix with {c} columns",
                bad.len()
            )));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.data
    }

    pub fn into_array(self) -> Array2<T> {
        self.data
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<T> {
        self.data.iter().copied().collect()
    }

    pub fn max_entry(&self) -> Option<T> {
        self.data.iter().copied().reduce(T::max)
    }
}

impl<T: Scalar> Deref for Matrix<T> {
    type Target = Array2<T>;

    fn deref(&self) -> &Array2<T> {
        &self.data
    }
}

/// A [`Matrix`] whose entries are all `>= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonNegMatrix<T: Scalar> {
    inner: Matrix<T>,
}

impl<T: Scalar> NonNegMatrix<T> {
    pub fn new(data: Array2<T>) -> Result<Self> {
        Self::try_from(Matrix::new(data)?)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        NonNegMatrix {
            inner: Matrix::zeros(rows, cols),
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::try_from(Matrix::from_rows(rows)?)
    }

    /// Clamps negative entries (and `-0.0`) to zero. Used after updates whose
    /// output is non-negative up to rounding.
    pub(crate) fn from_clamped(mut data: Array2<T>) -> Result<Self> {
        data.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
        Self::new(data)
    }

    pub(crate) fn from_array_unchecked(data: Array2<T>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= T::zero()));
        NonNegMatrix {
            inner: Matrix { data },
        }
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn into_array(self) -> Array2<T> {
        self.inner.data
    }
}

impl<T: Scalar> TryFrom<Matrix<T>> for NonNegMatrix<T> {
    type Error = Error;

    fn try_from(m: Matrix<T>) -> Result<Self> {
        if let Some(((row, col), v)) = m.data.indexed_iter().find(|(_, v)| **v < T::zero()) {
            return Err(Error::NegativeEntry {
                row,
                col,
                value: v.as_f64(),
            });
        }
        Ok(NonNegMatrix { inner: m })
    }
}

impl<T: Scalar> Deref for NonNegMatrix<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.inner
    }
}

/// Divides `u` by its largest entry so that every entry lies in `[0, 1]`.
///
/// Returns the scaled matrix together with the divisor.
pub fn scale_to_unit<T: Scalar>(u: &NonNegMatrix<T>) -> Result<(NonNegMatrix<T>, T)> {
    let max = u
        .max_entry()
        .filter(|m| *m > T::zero())
        .ok_or_else(|| Error::Degenerate("cannot scale an all-zero matrix".into()))?;
    let scaled = u.as_array().mapv(|v| v / max);
    Ok((NonNegMatrix::from_array_unchecked(scaled), max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn scale_divides_by_max() {
        let u = NonNegMatrix::new(array![[2.0, 4.0], [0.0, 8.0]]).unwrap();
        let (s, m) = scale_to_unit(&u).unwrap();
        assert_eq!(m, 8.0);
        assert_eq!(s.as_array(), &array![[0.25, 0.5], [0.0, 1.0]]);

        let one = NonNegMatrix::new(array![[1.0f32]]).unwrap();
        let (s, m) = scale_to_unit(&one).unwrap();
        assert_eq!((s.as_array()[[0, 0]], m), (1.0, 1.0));
    }

    #[test]
    fn scale_rejects_all_zero() {
        let u = NonNegMatrix::<f64>::zeros(3, 3);
        assert!(matches!(scale_to_unit(&u), Err(Error::Degenerate(_))));
    }

    #[test]
    fn nonneg_reports_offending_entry() {
        let err = NonNegMatrix::new(array![[1.5, -2.0]]).unwrap_err();
        match err {
            Error::NegativeEntry { row, col, value } => {
                assert_eq!((row, col, value), (0, 1, -2.0));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn matrix_rejects_nan() {
        assert!(matches!(
            Matrix::new(array![[1.0, f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(Matrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
    }
}
