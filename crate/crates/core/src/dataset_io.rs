//! On-disk trajectory datasets: one CSV per frame (`P x dim`), an optional
//! truth-label CSV and a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::csv_io::{load_labels_csv, load_matrix_csv, save_labels_csv, save_matrix_csv};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::simulate::{SyntheticDataset, TrajectoryField};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dim: usize,
    #[serde(rename = "P")]
    pub points: usize,
    #[serde(rename = "L")]
    pub frames: usize,
    #[serde(rename = "K_true", default, skip_serializing_if = "Option::is_none")]
    pub num_labels: Option<usize>,
    /// Frame files relative to the manifest, in time order.
    #[serde(rename = "frames")]
    pub frame_files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_labels: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_names: Vec<String>,
}

/// A trajectory field read from disk, with truth labels when present.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub field: TrajectoryField<f64>,
    pub truth_labels: Option<Vec<usize>>,
    pub num_labels: Option<usize>,
}

impl From<SyntheticDataset<f64>> for LoadedDataset {
    fn from(d: SyntheticDataset<f64>) -> Self {
        LoadedDataset {
            field: d.field,
            truth_labels: Some(d.truth_labels),
            num_labels: Some(d.num_labels),
        }
    }
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the dataset into `dir` and returns the written paths, manifest last.
pub fn save_dataset(d: &SyntheticDataset<f64>, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (p, l, dim) = (d.num_points(), d.num_frames(), d.dim());
    let width = l.to_string().len().max(3);
    let mut written = Vec::with_capacity(l + 2);
    let mut frame_files = Vec::with_capacity(l);
    for f in 0..l {
        let name = format!("frame_{f:0width$}.csv");
        let m = Matrix::from_row_major(
            p,
            dim,
            (0..p).flat_map(|i| (0..dim).map(move |a| (i, a))).map(|(i, a)| d.field.positions[[i, f, a]]).collect(),
        )?;
        let path = dir.join(&name);
        save_matrix_csv(&m, &path)?;
        written.push(path);
        frame_files.push(name);
    }
    let labels = dir.join("truth_labels.csv");
    save_labels_csv(&d.truth_labels, &labels)?;
    written.push(labels);
    let manifest = DatasetManifest {
        dim,
        points: p,
        frames: l,
        num_labels: Some(d.num_labels),
        frame_files,
        truth_labels: Some("truth_labels.csv".into()),
        label_names: d.label_names.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&manifest, &path)?;
    written.push(path);
    Ok(written)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

/// Reads a dataset from its manifest; a directory argument means the
/// manifest inside it.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset> {
    let mut path = path.as_ref().to_path_buf();
    if path.is_dir() {
        path = path.join(MANIFEST_FILE);
    }
    let m = load_manifest(&path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if !(m.dim == 2 || m.dim == 3) {
        return Err(Error::Config(format!("{}: dim must be 2 or 3", path.display())));
    }
    if m.frame_files.len() != m.frames {
        return Err(Error::Length {
            left: m.frames,
            right: m.frame_files.len(),
        });
    }
    let mut positions = Array3::zeros((m.points, m.frames, 3));
    for (f, name) in m.frame_files.iter().enumerate() {
        let fp = base.join(name);
        let frame: Matrix<f64> = load_matrix_csv(&fp)?;
        if frame.rows() != m.points || frame.cols() != m.dim {
            return Err(Error::Shape(format!(
                "{}: expected {}x{}, found {}x{}",
                fp.display(),
                m.points,
                m.dim,
                frame.rows(),
                frame.cols()
            )));
        }
        for i in 0..m.points {
            for a in 0..m.dim {
                positions[[i, f, a]] = frame[[i, a]];
            }
        }
    }
    let truth_labels = match &m.truth_labels {
        Some(name) => {
            let labels = load_labels_csv(base.join(name))?;
            if labels.len() != m.points {
                return Err(Error::Length {
                    left: m.points,
                    right: labels.len(),
                });
            }
            Some(labels)
        }
        None => None,
    };
    Ok(LoadedDataset {
        field: TrajectoryField::new(m.dim, positions)?,
        truth_labels,
        num_labels: m.num_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::sim2d;
    use crate::rng::Seed;

    #[test]
    fn round_trip() {
        let d = sim2d().generate(Seed(2)).unwrap().remove(0);
        let dir = tempfile::tempdir().unwrap();
        let written = save_dataset(&d, dir.path()).unwrap();
        assert_eq!(written.len(), d.num_frames() + 2);
        assert!(dir.path().join("frame_000.csv").exists());
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.field, d.field);
        assert_eq!(back.truth_labels.as_deref(), Some(&d.truth_labels[..]));
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["K_true"], 3);
        assert_eq!(v["L"], 11);
    }

    #[test]
    fn missing_frame_is_io_error() {
        let d = sim2d().generate(Seed(2)).unwrap().remove(0);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&d, dir.path()).unwrap();
        fs::remove_file(dir.path().join("frame_004.csv")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
    }
}
