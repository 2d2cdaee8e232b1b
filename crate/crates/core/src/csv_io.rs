//! Header-less comma-separated matrix files.
//!
//! One line per row, LF endings, each value printed with the shortest decimal
//! representation that parses back to the identical float.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Scalar;

pub fn load_matrix_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_matrix_csv<T: Scalar>(text: &str, path: &Path) -> Result<Matrix<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut entries = Vec::new();
    let mut rows = 0usize;
    let mut cols = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        if rows == 0 {
            cols = record.len();
        }
        for field in record.iter() {
            let v: T = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("not a decimal number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("non-finite value: {field:?}"),
                });
            }
            entries.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "empty input".into(),
        });
    }
    Matrix::from_row_major(rows, cols, entries)
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Ragged {
            path: path.to_path_buf(),
            line,
            expected: expected_len as usize,
            found: len as usize,
        },
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

pub fn format_matrix_csv<T: Scalar>(m: &Matrix<T>) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 12);
    for row in m.as_array().rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("write to String");
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix_csv<T: Scalar>(m: &Matrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_csv(m)).map_err(|e| Error::io(path, e))
}

/// Integer labels, one per line.
pub fn save_labels_csv(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").expect("write to String");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                msg: format!("not a label: {l:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(text: &str) -> Result<Matrix<f64>> {
        parse_matrix_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn loads_row_major_layout() {
        let m = parse("1,2\n3,4").unwrap();
        assert_eq!(m.as_array(), &array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_field_reports_line() {
        match parse("1,2\n3,x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        match parse("1,2\n3\n") {
            Err(Error::Ragged {
                line,
                expected,
                found,
                ..
            }) => assert_eq!((line, expected, found), (2, 2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn writes_shortest_decimals() {
        let z = Matrix::<f64>::zeros(1, 1);
        assert_eq!(format_matrix_csv(&z), "0\n");
        let m = Matrix::new(array![[1.5, -2.0]]).unwrap();
        assert_eq!(format_matrix_csv(&m), "1.5,-2\n");
    }

    #[test]
    fn missing_file_is_io_error() {
        let r: Result<Matrix<f64>> = load_matrix_csv("/nonexistent/definitely/not/here.csv");
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
