//! Named synthetic scenarios and parameter sets.
//!
//! `sim2d`, `sim3d-1`, `sim3d-2` and `cohort` pair a parametric scenario with
//! parameters tuned for it. The `paper-*` presets carry the published
//! parameter values verbatim on the closest scenario; those values were
//! chosen for a differently scaled feature matrix and are kept for reference
//! and sweeps rather than as tuned settings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Seed};
use crate::simulate::{generate_dataset, Geometry, Motion, RegionSpec, Sampling, SyntheticDataset};

/// A synthetic scenario: regions, sampling and frame count, optionally
/// replicated over subjects with jittered motion rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub regions: Vec<RegionSpec<f64>>,
    pub sampling: Sampling<f64>,
    pub frames: usize,
    /// Number of subjects; 1 for single-subject scenarios.
    pub subjects: usize,
    /// Relative motion-rate jitter between subjects.
    pub jitter: f64,
}

impl Scenario {
    /// One dataset per subject. Subject `i` uses the seed's `i`-th child; a
    /// single-subject scenario uses the seed itself.
    pub fn generate(&self, seed: Seed) -> Result<Vec<SyntheticDataset<f64>>> {
        if self.subjects <= 1 {
            return Ok(vec![generate_dataset(&self.regions, &self.sampling, self.frames, seed)?]);
        }
        (0..self.subjects)
            .map(|i| {
                let child = seed.child(i as u64);
                let mut rng = child.rng(stream::COHORT);
                let mut jittered = |m: &Motion<f64>| {
                    let f = 1.0 + self.jitter * (2.0 * rng.random::<f64>() - 1.0);
                    scale_motion(m, f)
                };
                let regions: Vec<_> = self
                    .regions
                    .iter()
                    .map(|r| RegionSpec {
                        motion: jittered(&r.motion),
                        ..r.clone()
                    })
                    .collect();
                let sampling = Sampling {
                    interdigitation_motion: jittered(&self.sampling.interdigitation_motion),
                    ..self.sampling.clone()
                };
                generate_dataset(&regions, &sampling, self.frames, child)
            })
            .collect()
    }
}

fn scale_motion(m: &Motion<f64>, f: f64) -> Motion<f64> {
    match m {
        Motion::Translation { velocity } => Motion::Translation {
            velocity: velocity.map(|v| v * f),
        },
        Motion::Rotation {
            center,
            axis,
            degrees_per_frame,
        } => Motion::Rotation {
            center: *center,
            axis: *axis,
            degrees_per_frame: degrees_per_frame * f,
        },
    }
}

/// Solver and clustering parameters of a preset. `c = None` means automatic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub lambda: f64,
    pub c: Option<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub h: usize,
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub scenario: Scenario,
    pub params: ParameterSet,
}

pub const PRESET_NAMES: [&str; 8] = [
    "sim2d",
    "sim3d-1",
    "sim3d-2",
    "cohort",
    "paper-2d",
    "paper-3d-1",
    "paper-3d-2",
    "paper-invivo",
];

fn boxed(min: [f64; 3], max: [f64; 3]) -> Geometry<f64> {
    Geometry::Box { min, max }
}

fn rotation(center: [f64; 3], axis: [f64; 3], degrees_per_frame: f64) -> Motion<f64> {
    Motion::Rotation {
        center,
        axis,
        degrees_per_frame,
    }
}

fn translation(velocity: [f64; 3]) -> Motion<f64> {
    Motion::Translation { velocity }
}

fn region(name: &str, geometry: Geometry<f64>, motion: Motion<f64>, partner: Option<&str>) -> RegionSpec<f64> {
    RegionSpec {
        name: name.into(),
        geometry,
        motion,
        interdigitation_partner: partner.map(Into::into),
    }
}

fn sampling(dim: usize, interdigitation_motion: Motion<f64>, noise_std: f64) -> Sampling<f64> {
    Sampling {
        dim,
        spacing: 1.0,
        checker_period: 1,
        interdigitation_motion,
        noise_std,
    }
}

/// Vertical column `V` crossing a top slab `SL` and a middle slab `T`. `V`
/// rotates downward and `SL` upward about distant pivots, `T` translates
/// upward; the two overlaps interleave with a fourth motion.
pub fn sim3d_1() -> Scenario {
    Scenario {
        name: "sim3d-1".into(),
        regions: vec![
            region(
                "V",
                boxed([7.0, 0.0, 0.0], [12.0, 9.0, 12.0]),
                rotation([-20.0, 4.5, 6.0], [0.1, 1.0, 0.05], 1.5),
                None,
            ),
            region(
                "SL",
                boxed([0.0, 0.0, 9.0], [19.0, 9.0, 12.0]),
                rotation([40.0, 4.5, 10.0], [0.0, 1.0, 0.1], 1.2),
                Some("V"),
            ),
            region(
                "T",
                boxed([0.0, 0.0, 3.0], [19.0, 9.0, 6.0]),
                translation([0.1, 0.05, 0.3]),
                Some("V"),
            ),
        ],
        sampling: sampling(3, translation([-0.3, 0.15, 0.1]), 0.03),
        frames: 11,
        subjects: 1,
        jitter: 0.0,
    }
}

/// A large fan `GG` rotating downward, an upper block `T` rotating upward and
/// a lower block `GH` translating upward, with `T` and `GH` interleaving
/// with `GG`.
pub fn sim3d_2() -> Scenario {
    Scenario {
        name: "sim3d-2".into(),
        regions: vec![
            region(
                "GG",
                Geometry::Ellipsoid {
                    center: [10.0, 5.0, 7.0],
                    radii: [6.5, 5.5, 8.5],
                },
                rotation([10.0, 5.0, -15.0], [0.05, 1.0, 0.0], 1.6),
                None,
            ),
            region(
                "T",
                boxed([0.0, 0.0, 11.0], [20.0, 10.0, 14.0]),
                rotation([35.0, 5.0, 12.0], [0.0, 1.0, -0.1], -1.4),
                Some("GG"),
            ),
            region(
                "GH",
                boxed([3.0, 1.0, 0.0], [17.0, 9.0, 3.0]),
                translation([-0.05, 0.1, 0.35]),
                Some("GG"),
            ),
        ],
        sampling: sampling(3, translation([0.3, -0.1, 0.12]), 0.03),
        frames: 11,
        subjects: 1,
        jitter: 0.0,
    }
}

/// Planar field with a vertically moving, a horizontally moving and a
/// rotating zone.
pub fn sim2d() -> Scenario {
    Scenario {
        name: "sim2d".into(),
        regions: vec![
            region("vertical", boxed([0.0, 0.0, 0.0], [14.0, 24.0, 0.0]), translation([0.08, 0.4, 0.0]), None),
            region(
                "horizontal",
                boxed([15.0, 0.0, 0.0], [29.0, 24.0, 0.0]),
                translation([0.4, -0.1, 0.0]),
                None,
            ),
            region(
                "rotation",
                boxed([30.0, 0.0, 0.0], [44.0, 24.0, 0.0]),
                rotation([62.0, 12.0, 0.0], [0.0, 0.0, 1.0], 1.0),
                None,
            ),
        ],
        sampling: sampling(2, translation([0.0, 0.0, 0.0]), 0.03),
        frames: 11,
        subjects: 1,
        jitter: 0.0,
    }
}

/// Four subjects of `sim3d-1` with motion rates jittered by up to 10%.
pub fn cohort() -> Scenario {
    Scenario {
        name: "cohort".into(),
        subjects: 4,
        jitter: 0.1,
        ..sim3d_1()
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let (description, scenario, params) = match name {
        "sim2d" => (
            "planar vertical/horizontal/rotational zones, tuned",
            sim2d(),
            ParameterSet {
                lambda: 0.25,
                c: Some(10.0),
                beta: 0.05,
                gamma: 0.0,
                h: 10,
                sigma: Some(0.5),
            },
        ),
        "sim3d-1" => (
            "two rotating regions and one translating region with two interdigitated overlaps, tuned",
            sim3d_1(),
            ParameterSet {
                lambda: 0.5,
                c: Some(10.0),
                beta: 0.05,
                gamma: 0.0,
                h: 50,
                sigma: Some(0.5),
            },
        ),
        "sim3d-2" => (
            "rotation-down fan, rotation-up block, translation-up block, tuned",
            sim3d_2(),
            ParameterSet {
                lambda: 0.5,
                c: Some(10.0),
                beta: 0.05,
                gamma: 0.0,
                h: 50,
                sigma: Some(0.5),
            },
        ),
        "cohort" => (
            "four jittered sim3d-1 subjects with a common map, tuned",
            cohort(),
            ParameterSet {
                lambda: 0.5,
                c: Some(10.0),
                beta: 0.05,
                gamma: 1.0,
                h: 50,
                sigma: Some(0.5),
            },
        ),
        "paper-2d" => (
            "published 2D parameters on sim2d",
            sim2d(),
            ParameterSet {
                lambda: 500.0,
                c: Some(100.0),
                beta: 0.05,
                gamma: 0.0,
                h: 10,
                sigma: Some(0.07),
            },
        ),
        "paper-3d-1" => (
            "published 3D data-1 parameters on sim3d-1",
            sim3d_1(),
            ParameterSet {
                lambda: 890.0,
                c: Some(55.0),
                beta: 0.03,
                gamma: 0.0,
                h: 49,
                sigma: Some(0.05),
            },
        ),
        "paper-3d-2" => (
            "published 3D data-2 parameters on sim3d-2",
            sim3d_2(),
            ParameterSet {
                lambda: 800.0,
                c: Some(100.0),
                beta: 0.05,
                gamma: 0.0,
                h: 50,
                sigma: Some(0.03),
            },
        ),
        "paper-invivo" => (
            "published multi-subject parameters on the cohort scenario",
            cohort(),
            ParameterSet {
                lambda: 800.0,
                c: Some(600.0),
                beta: 0.03,
                gamma: 20.0,
                h: 100,
                sigma: None,
            },
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.into(),
        description: description.into(),
        scenario,
        params,
    })
}

pub fn all_presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("built-in preset"))
        .collect()
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |x| x.to_string())
}

/// Human-readable listing of every preset.
pub fn list_presets() -> String {
    let mut out = String::new();
    for p in all_presets() {
        let s = &p.scenario;
        let q = &p.params;
        out.push_str(&format!(
            "{}\n  {}\n  scenario={} dim={} frames={} subjects={}\n  lambda={} c={} beta={} gamma={} H={} sigma={}\n",
            p.name,
            p.description,
            s.name,
            s.sampling.dim,
            s.frames,
            s.subjects,
            q.lambda,
            fmt_opt(q.c, "auto"),
            q.beta,
            q.gamma,
            q.h,
            fmt_opt(q.sigma, "median"),
        ));
    }
    out
}

/// The same listing as JSON.
pub fn list_presets_json() -> String {
    serde_json::to_string_pretty(&all_presets()).expect("presets serialize")
}
