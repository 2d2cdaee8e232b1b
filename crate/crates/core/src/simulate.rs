//! Synthetic Lagrangian trajectory fields with planted region labels.
//!
//! Points sit on a regular grid inside a union of boxes and ellipsoids. Each
//! region moves rigidly (translation or rotation about an axis). Where two
//! partnered regions overlap, grid cells alternate in a checkerboard between
//! the first region and an interdigitation class that follows its own motion
//! and carries its own label.

use std::collections::BTreeMap;

use ndarray::Array3;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Seed};
use crate::Scalar;

pub type Point<T> = [T; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry<T> {
    Box { min: Point<T>, max: Point<T> },
    Ellipsoid { center: Point<T>, radii: Point<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion<T> {
    /// Displacement of `velocity` per frame.
    Translation { velocity: Point<T> },
    /// Rotation about the line through `center` along `axis`.
    Rotation {
        center: Point<T>,
        axis: Point<T>,
        degrees_per_frame: T,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec<T> {
    pub name: String,
    pub geometry: Geometry<T>,
    pub motion: Motion<T>,
    #[serde(default)]
    pub interdigitation_partner: Option<String>,
}

/// Grid and measurement parameters shared by all regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling<T> {
    /// 2 or 3. In 2D only x and y are used and z stays 0.
    pub dim: usize,
    pub spacing: T,
    /// Checkerboard cell size in grid steps.
    pub checker_period: usize,
    /// Motion of interdigitated cells.
    pub interdigitation_motion: Motion<T>,
    /// Standard deviation of independent Gaussian tracking noise added to
    /// every coordinate of frames 1.. (frame 0 is exact).
    pub noise_std: T,
}

/// Per-point trajectories, shape `(points, frames, 3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryField<T: Scalar> {
    pub dim: usize,
    pub positions: Array3<T>,
}

impl<T: Scalar> TrajectoryField<T> {
    pub fn new(dim: usize, positions: Array3<T>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if positions.dim().2 != 3 {
            return Err(Error::Shape("trajectory array must have 3 coordinates".into()));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite trajectory coordinate".into()));
        }
        Ok(TrajectoryField { dim, positions })
    }

    pub fn num_points(&self) -> usize {
        self.positions.dim().0
    }

    pub fn num_frames(&self) -> usize {
        self.positions.dim().1
    }

    /// Position of `point` at `frame`.
    pub fn at(&self, point: usize, frame: usize) -> Point<T> {
        let p = &self.positions;
        [p[[point, frame, 0]], p[[point, frame, 1]], p[[point, frame, 2]]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset<T: Scalar> {
    pub field: TrajectoryField<T>,
    /// Labels in `1..=num_labels`.
    pub truth_labels: Vec<usize>,
    pub num_labels: usize,
    /// Name of each label, index `label - 1`.
    pub label_names: Vec<String>,
    /// Grid index of each point.
    pub grid_index: Vec<[usize; 3]>,
}

impl<T: Scalar> SyntheticDataset<T> {
    pub fn dim(&self) -> usize {
        self.field.dim
    }

    pub fn num_points(&self) -> usize {
        self.field.num_points()
    }

    pub fn num_frames(&self) -> usize {
        self.field.num_frames()
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_labels];
        for &l in &self.truth_labels {
            counts[l - 1] += 1;
        }
        counts
    }
}

impl<T: Scalar> Geometry<T> {
    fn validate(&self, name: &str, dim: usize) -> Result<()> {
        let extents = match self {
            Geometry::Box { min, max } => [max[0] - min[0], max[1] - min[1], max[2] - min[2]],
            Geometry::Ellipsoid { radii, .. } => *radii,
        };
        if extents[..dim].iter().any(|e| !(*e > T::zero()) || !e.is_finite()) {
            return Err(Error::Config(format!(
                "region {name:?} must have positive extents"
            )));
        }
        Ok(())
    }

    fn contains(&self, p: &Point<T>, dim: usize) -> bool {
        match self {
            Geometry::Box { min, max } => (0..dim).all(|a| p[a] >= min[a] && p[a] <= max[a]),
            Geometry::Ellipsoid { center, radii } => {
                let r: T = (0..dim)
                    .map(|a| {
                        let d = (p[a] - center[a]) / radii[a];
                        d * d
                    })
                    .sum();
                r <= T::one()
            }
        }
    }

    fn bounds(&self) -> (Point<T>, Point<T>) {
        match self {
            Geometry::Box { min, max } => (*min, *max),
            Geometry::Ellipsoid { center, radii } => (
                [center[0] - radii[0], center[1] - radii[1], center[2] - radii[2]],
                [center[0] + radii[0], center[1] + radii[1], center[2] + radii[2]],
            ),
        }
    }
}

impl<T: Scalar> Motion<T> {
    /// Keeps the x-y plane fixed: zero z velocity, or rotation about z.
    pub fn is_planar(&self) -> bool {
        match self {
            Motion::Translation { velocity } => velocity[2] == T::zero(),
            Motion::Rotation { axis, .. } => axis[0] == T::zero() && axis[1] == T::zero(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Motion::Translation { velocity } => {
                if velocity.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("region {name:?}: non-finite velocity")));
                }
            }
            Motion::Rotation {
                center,
                axis,
                degrees_per_frame,
            } => {
                let n2: T = axis.iter().map(|a| *a * *a).sum();
                if !(n2 > T::zero()) || !n2.is_finite() {
                    return Err(Error::Config(format!(
                        "region {name:?}: rotation axis must be non-zero"
                    )));
                }
                if center.iter().any(|v| !v.is_finite()) || !degrees_per_frame.is_finite() {
                    return Err(Error::Config(format!("region {name:?}: non-finite rotation")));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> RegionSpec<T> {
    /// Checks extents in the first `dim` axes and the motion parameters.
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.geometry.validate(&self.name, dim)?;
        self.motion.validate(&self.name)
    }
}

/// Position of `point` after `frame_index` frames of `motion`.
pub fn apply_rigid_motion<T: Scalar>(point: Point<T>, motion: &Motion<T>, frame_index: usize) -> Point<T> {
    let f = T::from_count(frame_index);
    match motion {
        Motion::Translation { velocity } => [
            point[0] + f * velocity[0],
            point[1] + f * velocity[1],
            point[2] + f * velocity[2],
        ],
        Motion::Rotation {
            center,
            axis,
            degrees_per_frame,
        } => {
            if frame_index == 0 {
                return point;
            }
            let n = axis.iter().map(|a| *a * *a).sum::<T>().sqrt();
            let k = [axis[0] / n, axis[1] / n, axis[2] / n];
            let angle = (f * *degrees_per_frame).to_radians();
            let (sin, cos) = angle.sin_cos();
            let v = [point[0] - center[0], point[1] - center[1], point[2] - center[2]];
            // Rodrigues: v cos + (k x v) sin + k (k.v)(1 - cos)
            let kxv = [
                k[1] * v[2] - k[2] * v[1],
                k[2] * v[0] - k[0] * v[2],
                k[0] * v[1] - k[1] * v[0],
            ];
            let kdv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
            let one_minus = T::one() - cos;
            let mut out = [T::zero(); 3];
            for a in 0..3 {
                out[a] = center[a] + v[a] * cos + kxv[a] * sin + k[a] * kdv * one_minus;
            }
            out
        }
    }
}

/// Samples the regions on a grid and moves every point through `frames` frames.
pub fn generate_dataset<T: Scalar>(
    regions: &[RegionSpec<T>],
    sampling: &Sampling<T>,
    frames: usize,
    seed: Seed,
) -> Result<SyntheticDataset<T>> {
    validate_inputs(regions, sampling, frames)?;
    let dim = sampling.dim;
    let groups = partner_groups(regions);

    let (lo, hi) = regions.iter().map(|r| r.geometry.bounds()).fold(
        ([T::infinity(); 3], [T::neg_infinity(); 3]),
        |(lo, hi), (a, b)| {
            (
                [lo[0].min(a[0]), lo[1].min(a[1]), lo[2].min(a[2])],
                [hi[0].max(b[0]), hi[1].max(b[1]), hi[2].max(b[2])],
            )
        },
    );
    let h = sampling.spacing;
    let slack = h * T::lit(1e-9);
    let steps = |a: usize| -> usize {
        if a >= dim {
            return 1;
        }
        ((hi[a] - lo[a] + slack) / h).floor().to_usize().unwrap_or(0) + 1
    };
    let counts = [steps(0), steps(1), steps(2)];

    // raw class id: region index, or regions.len() + group index
    let mut reference = Vec::new();
    let mut class = Vec::new();
    let mut grid_index = Vec::new();
    let period = sampling.checker_period.max(1);
    for iz in 0..counts[2] {
        for iy in 0..counts[1] {
            for ix in 0..counts[0] {
                let p = [
                    lo[0] + T::from_count(ix) * h,
                    lo[1] + T::from_count(iy) * h,
                    if dim == 3 { lo[2] + T::from_count(iz) * h } else { T::zero() },
                ];
                let inside: Vec<usize> = (0..regions.len())
                    .filter(|&r| regions[r].geometry.contains(&p, dim))
                    .collect();
                let Some(&first) = inside.first() else { continue };
                let mut c = first;
                let partnered = inside.iter().enumerate().find_map(|(i, &a)| {
                    inside[i + 1..]
                        .iter()
                        .find(|&&b| are_partners(&regions[a], &regions[b]))
                        .map(|_| a)
                });
                if let Some(a) = partnered {
                    let parity = ix / period + iy / period + iz / period;
                    if parity % 2 == 1 {
                        c = regions.len() + groups[a].expect("partnered region has a group");
                    }
                }
                reference.push(p);
                class.push(c);
                grid_index.push([ix, iy, iz]);
            }
        }
    }
    if reference.is_empty() {
        return Err(Error::EmptyRegion);
    }

    // compact label numbering: regions first, then interdigitation groups,
    // skipping classes that received no points
    let mut used: BTreeMap<usize, usize> = class.iter().map(|&c| (c, 0)).collect();
    let mut label_names = Vec::new();
    for (next, (c, label)) in used.iter_mut().enumerate() {
        *label = next + 1;
        label_names.push(if *c < regions.len() {
            regions[*c].name.clone()
        } else {
            format!("interdigitated-{}", *c - regions.len() + 1)
        });
    }
    let truth_labels: Vec<usize> = class.iter().map(|c| used[c]).collect();

    let p = reference.len();
    let mut positions = Array3::zeros((p, frames, 3));
    let noise = if sampling.noise_std > T::zero() {
        Some(Normal::new(0.0, sampling.noise_std.as_f64()).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let mut rng = seed.rng(stream::SIMULATE);
    for (i, (x0, &c)) in reference.iter().zip(&class).enumerate() {
        let motion = if c < regions.len() {
            &regions[c].motion
        } else {
            &sampling.interdigitation_motion
        };
        for l in 0..frames {
            let x = apply_rigid_motion(*x0, motion, l);
            for a in 0..3 {
                let mut v = x[a];
                if a < dim && l > 0 {
                    if let Some(n) = &noise {
                        v += T::lit(n.sample(&mut rng));
                    }
                }
                positions[[i, l, a]] = v;
            }
        }
    }
    Ok(SyntheticDataset {
        field: TrajectoryField::new(dim, positions)?,
        truth_labels,
        num_labels: label_names.len(),
        label_names,
        grid_index,
    })
}

fn validate_inputs<T: Scalar>(regions: &[RegionSpec<T>], sampling: &Sampling<T>, frames: usize) -> Result<()> {
    if regions.is_empty() {
        return Err(Error::Config("at least one region is required".into()));
    }
    if frames < 2 {
        return Err(Error::Config(format!("need at least 2 frames, got {frames}")));
    }
    if !(sampling.dim == 2 || sampling.dim == 3) {
        return Err(Error::Config(format!("dimension must be 2 or 3, got {}", sampling.dim)));
    }
    if !(sampling.spacing > T::zero()) || !sampling.spacing.is_finite() {
        return Err(Error::Config("grid spacing must be positive".into()));
    }
    if sampling.noise_std < T::zero() || !sampling.noise_std.is_finite() {
        return Err(Error::Config("noise standard deviation must be >= 0".into()));
    }
    sampling.interdigitation_motion.validate("interdigitation")?;
    if sampling.dim == 2 && !sampling.interdigitation_motion.is_planar() {
        return Err(Error::Config("2D interdigitation motion must stay in the x-y plane".into()));
    }
    for (i, r) in regions.iter().enumerate() {
        r.validate(sampling.dim)?;
        if sampling.dim == 2 && !r.motion.is_planar() {
            return Err(Error::Config(format!(
                "region {:?}: 2D motion must stay in the x-y plane",
                r.name
            )));
        }
        if regions[..i].iter().any(|o| o.name == r.name) {
            return Err(Error::Config(format!("duplicate region name {:?}", r.name)));
        }
        if let Some(p) = &r.interdigitation_partner {
            if !regions.iter().any(|o| &o.name == p) || p == &r.name {
                return Err(Error::Config(format!(
                    "region {:?} names unknown partner {p:?}",
                    r.name
                )));
            }
        }
    }
    Ok(())
}

fn are_partners<T>(a: &RegionSpec<T>, b: &RegionSpec<T>) -> bool {
    a.interdigitation_partner.as_deref() == Some(b.name.as_str())
        || b.interdigitation_partner.as_deref() == Some(a.name.as_str())
}

/// Connected components of the partner relation; `None` for unpartnered regions.
fn partner_groups<T>(regions: &[RegionSpec<T>]) -> Vec<Option<usize>> {
    let n = regions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut linked = vec![false; n];
    for a in 0..n {
        for b in a + 1..n {
            if are_partners(&regions[a], &regions[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
                linked[a] = true;
                linked[b] = true;
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut out = vec![None; n];
    for i in 0..n {
        if !linked[i] {
            continue;
        }
        let r = find(&mut parent, i);
        let g = match roots.iter().position(|&x| x == r) {
            Some(g) => g,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        out[i] = Some(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(name: &str, geometry: Geometry<f64>, motion: Motion<f64>) -> RegionSpec<f64> {
        RegionSpec {
            name: name.into(),
            geometry,
            motion,
            interdigitation_partner: None,
        }
    }

    fn sampling(dim: usize) -> Sampling<f64> {
        Sampling {
            dim,
            spacing: 1.0,
            checker_period: 1,
            interdigitation_motion: Motion::Translation {
                velocity: [-0.3, 0.0, 0.1],
            },
            noise_std: 0.0,
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = Motion::Rotation {
            center: [0.0, 0.0, 0.0],
            axis: [0.0, 0.0, 1.0],
            degrees_per_frame: 90.0,
        };
        let p: [f64; 3] = apply_rigid_motion([1.0, 0.0, 0.0], &m, 1);
        for (a, b) in p.iter().zip([0.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(apply_rigid_motion([1.0, 2.0, 3.0], &m, 0), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn translation_steps_have_unit_length() {
        let r = region(
            "box",
            Geometry::Box {
                min: [0.0; 3],
                max: [2.0, 2.0, 2.0],
            },
            Motion::Translation {
                velocity: [0.0, 0.0, 1.0],
            },
        );
        let d = generate_dataset(&[r], &sampling(3), 11, Seed(1)).unwrap();
        assert_eq!(d.num_points(), 27);
        assert_eq!(d.num_labels, 1);
        for p in 0..d.num_points() {
            for l in 0..10 {
                let a = d.field.at(p, l);
                let b = d.field.at(p, l + 1);
                assert_eq!([b[0] - a[0], b[1] - a[1], b[2] - a[2]], [0.0, 0.0, 1.0]);
            }
        }
    }

    #[test]
    fn zero_rotation_is_static() {
        let r = region(
            "still",
            Geometry::Ellipsoid {
                center: [0.0; 3],
                radii: [2.0, 2.0, 2.0],
            },
            Motion::Rotation {
                center: [5.0, 0.0, 0.0],
                axis: [0.0, 1.0, 0.0],
                degrees_per_frame: 0.0,
            },
        );
        let d = generate_dataset(&[r], &sampling(3), 4, Seed(1)).unwrap();
        for p in 0..d.num_points() {
            assert_eq!(d.field.at(p, 0), d.field.at(p, 3));
        }
    }

    #[test]
    fn partnered_overlaps_share_one_extra_label() {
        let rot = |deg| Motion::Rotation {
            center: [-10.0, 0.0, 0.0],
            axis: [0.0, 1.0, 0.0],
            degrees_per_frame: deg,
        };
        let mut v = region(
            "V",
            Geometry::Box {
                min: [3.0, 0.0, 0.0],
                max: [5.0, 3.0, 9.0],
            },
            rot(1.0),
        );
        v.interdigitation_partner = None;
        let mut sl = region(
            "SL",
            Geometry::Box {
                min: [0.0, 0.0, 7.0],
                max: [9.0, 3.0, 9.0],
            },
            rot(-1.0),
        );
        sl.interdigitation_partner = Some("V".into());
        let mut t = region(
            "T",
            Geometry::Box {
                min: [0.0, 0.0, 2.0],
                max: [9.0, 3.0, 4.0],
            },
            Motion::Translation {
                velocity: [0.0, 0.0, 0.3],
            },
        );
        t.interdigitation_partner = Some("V".into());
        let d = generate_dataset(&[v, sl, t], &sampling(3), 3, Seed(0)).unwrap();
        assert_eq!(d.num_labels, 4);
        let counts = d.label_counts();
        assert_eq!(counts.iter().sum::<usize>(), d.num_points());
        assert!(counts.iter().all(|&c| c > 0));
        assert_eq!(d.label_names[3], "interdigitated-1");
    }

    #[test]
    fn rejects_bad_specs() {
        let good = region(
            "a",
            Geometry::Box {
                min: [0.0; 3],
                max: [1.0; 3],
            },
            Motion::Translation { velocity: [0.0; 3] },
        );
        assert!(generate_dataset(&[good.clone()], &sampling(3), 1, Seed(0)).is_err());
        assert!(generate_dataset::<f64>(&[], &sampling(3), 3, Seed(0)).is_err());
        let mut flat = good.clone();
        flat.geometry = Geometry::Box {
            min: [0.0; 3],
            max: [1.0, 0.0, 1.0],
        };
        assert!(matches!(
            generate_dataset(&[flat], &sampling(3), 3, Seed(0)),
            Err(Error::Config(_))
        ));
        let mut axisless = good;
        axisless.motion = Motion::Rotation {
            center: [0.0; 3],
            axis: [0.0; 3],
            degrees_per_frame: 1.0,
        };
        assert!(generate_dataset(&[axisless], &sampling(3), 3, Seed(0)).is_err());
    }

    #[test]
    fn tiny_ellipsoid_between_grid_points_is_empty() {
        let r = region(
            "dot",
            Geometry::Ellipsoid {
                center: [0.5, 0.5, 0.5],
                radii: [0.1, 0.1, 0.1],
            },
            Motion::Translation { velocity: [0.0; 3] },
        );
        let mut s = sampling(3);
        s.spacing = 1.0;
        // grid starts at the bounding-box corner (0.4, 0.4, 0.4); no grid point
        // lies inside the radius-0.1 ball except possibly the center.
        let res = generate_dataset(&[r], &s, 3, Seed(0));
        assert!(matches!(res, Err(Error::EmptyRegion)));
    }

    #[test]
    fn noise_depends_on_seed_only() {
        let r = region(
            "box",
            Geometry::Box {
                min: [0.0; 3],
                max: [2.0, 2.0, 2.0],
            },
            Motion::Translation {
                velocity: [0.1, 0.0, 0.3],
            },
        );
        let mut s = sampling(3);
        s.noise_std = 0.01;
        let a = generate_dataset(&[r.clone()], &s, 5, Seed(7)).unwrap();
        let b = generate_dataset(&[r.clone()], &s, 5, Seed(7)).unwrap();
        let c = generate_dataset(&[r], &s, 5, Seed(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.field, c.field);
    }
}
