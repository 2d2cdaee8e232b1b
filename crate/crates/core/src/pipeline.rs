//! End-to-end runs: data, features, graph, factorization, clustering and
//! evaluation, plus parameter sweeps and run reports.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{cluster_weighting_map, median_column_distance, ClusterAssignment};
use crate::csv_io::{save_labels_csv, save_matrix_csv};
use crate::dataset_io::{load_dataset, LoadedDataset};
use crate::error::{Error, Result};
use crate::factorize::{
    init_gnmf, normalize_building_blocks, objective_single, solve_joint, solve_shallow_sparse,
    solve_single, weighted_mean, FactorPair, SolverConfig, StepSize,
};
use crate::features::build_feature_matrix;
use crate::graph::{knn_heat_affinity, laplacian, GraphLaplacian, DEFAULT_NEIGHBORS};
use crate::matrix::{scale_to_unit, NonNegMatrix};
use crate::metrics::{unit_size_stats, MetricsReport};
use crate::presets::preset;
use crate::rng::Seed;
use crate::simulate::TrajectoryField;

/// Factorization variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Graph-regularized multiplicative initializer only.
    GNmfS,
    /// Shallow multiplicative updates with graph and sparsity terms.
    GsNmfS,
    /// Unrolled ISTA without the graph term.
    IstaSNmfS,
    /// Unrolled ISTA with graph and sparsity terms.
    IstaGsNmfS,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GNmfS, Method::GsNmfS, Method::IstaSNmfS, Method::IstaGsNmfS];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::GNmfS => "g-nmf-s",
            Method::GsNmfS => "gs-nmf-s",
            Method::IstaSNmfS => "ista-s-nmf-s",
            Method::IstaGsNmfS => "ista-gs-nmf-s",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Flat run configuration. Every key may appear in a TOML config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Scenario and parameter preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Dataset manifests; when non-empty they replace the preset scenario.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub datasets: Vec<PathBuf>,
    pub method: Method,
    pub seed: u64,
    /// Cluster count `K`; defaults to the number of truth labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    /// Building blocks `k`; defaults to `K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: StepSize<f64>,
    pub h: usize,
    pub init_iters: usize,
    pub outer_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Neighbourhood size of the feature graph.
    pub neighbors: usize,
    /// Heat-kernel bandwidth; mean kept-edge length when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Weighting-map affinity bandwidth; median column distance when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Keep every `stride`-th point.
    pub stride: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preset: None,
            datasets: Vec::new(),
            method: Method::IstaGsNmfS,
            seed: 0,
            clusters: None,
            k: None,
            lambda: 0.0,
            beta: 0.0,
            gamma: 0.0,
            c: StepSize::Auto,
            h: 50,
            init_iters: 300,
            outer_rounds: 1,
            alpha: None,
            tol: None,
            neighbors: DEFAULT_NEIGHBORS,
            bandwidth: None,
            sigma: None,
            stride: 1,
        }
    }
}

impl PipelineConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        let p = preset(name)?;
        Ok(PipelineConfig {
            preset: Some(name.into()),
            lambda: p.params.lambda,
            beta: p.params.beta,
            gamma: p.params.gamma,
            c: p.params.c.map_or(StepSize::Auto, StepSize::Fixed),
            h: p.params.h,
            sigma: p.params.sigma,
            ..Default::default()
        })
    }

    /// Builds a configuration from an optional TOML file text and a table of
    /// overrides. A `preset` key in either (overrides first) seeds every other
    /// value; the file then the overrides are layered on top.
    pub fn resolve(file: Option<&str>, overrides: toml::Table) -> Result<Self> {
        let file: toml::Table = match file {
            Some(text) => text
                .parse()
                .map_err(|e: toml::de::Error| Error::Config(format!("config file: {e}")))?,
            None => toml::Table::new(),
        };
        let preset_name = overrides
            .get("preset")
            .or_else(|| file.get("preset"))
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Config("preset must be a string".into()))
            })
            .transpose()?;
        let base = match &preset_name {
            Some(name) => Self::from_preset(name)?,
            None => Self::default(),
        };
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        table.extend(file);
        table.extend(overrides);
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate_params()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Full check before a run: parameters plus a data source.
    pub fn validate(&self) -> Result<()> {
        if self.preset.is_none() && self.datasets.is_empty() {
            return Err(Error::Config("no data: set a preset or a dataset manifest".into()));
        }
        self.validate_params()
    }

    pub fn validate_params(&self) -> Result<()> {
        if let Some(name) = &self.preset {
            preset(name)?;
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.neighbors == 0 {
            return Err(Error::Config("neighbors must be at least 1".into()));
        }
        if self.clusters == Some(0) || self.k == Some(0) {
            return Err(Error::Config("cluster and block counts must be at least 1".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config("sigma must be positive".into()));
            }
        }
        self.solver_config(1).validate()
    }

    /// Solver settings for this method with `k` blocks.
    pub fn solver_config(&self, k: usize) -> SolverConfig<f64> {
        SolverConfig {
            k,
            lambda: if self.method == Method::GNmfS { 0.0 } else { self.lambda },
            beta: if self.method == Method::IstaSNmfS { 0.0 } else { self.beta },
            gamma: self.gamma,
            step: self.c,
            ista_iters: self.h,
            init_iters: self.init_iters,
            alpha: self.alpha.clone(),
            outer_rounds: self.outer_rounds,
            seed: Seed(self.seed),
            tol: self.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectResult {
    /// Max entry of the raw feature matrix.
    pub feature_scale: f64,
    pub factors: FactorPair<f64>,
    pub assignment: ClusterAssignment,
    pub metrics: Option<MetricsReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommonResult {
    pub w_star: NonNegMatrix<f64>,
    pub assignment: ClusterAssignment,
    pub metrics: Option<MetricsReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// In-memory result of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub config: PipelineConfig,
    pub subjects: Vec<SubjectResult>,
    /// Present for more than one subject.
    pub common: Option<CommonResult>,
    pub truth: Option<Vec<usize>>,
    pub objective_trace: Vec<f64>,
    pub timings: Vec<StageTiming>,
}

impl PipelineOutcome {
    /// Common units for a cohort, otherwise the single subject's units.
    pub fn primary_assignment(&self) -> &ClusterAssignment {
        match &self.common {
            Some(c) => &c.assignment,
            None => &self.subjects[0].assignment,
        }
    }

    pub fn primary_metrics(&self) -> Option<&MetricsReport> {
        match &self.common {
            Some(c) => c.metrics.as_ref(),
            None => self.subjects[0].metrics.as_ref(),
        }
    }
}

fn timed<R>(timings: &mut Vec<StageTiming>, stage: &'static str, f: impl FnOnce() -> Result<R>) -> Result<R> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    timings.push(StageTiming {
        stage: stage.into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

fn load_subjects(cfg: &PipelineConfig) -> Result<Vec<LoadedDataset>> {
    if !cfg.datasets.is_empty() {
        return cfg.datasets.iter().map(load_dataset).collect();
    }
    let name = cfg.preset.as_deref().expect("validated config has data");
    Ok(preset(name)?
        .scenario
        .generate(Seed(cfg.seed))?
        .into_iter()
        .map(LoadedDataset::from)
        .collect())
}

fn subsample(d: LoadedDataset, stride: usize) -> Result<LoadedDataset> {
    if stride == 1 {
        return Ok(d);
    }
    let keep: Vec<usize> = (0..d.field.num_points()).step_by(stride).collect();
    let positions = d.field.positions.select(ndarray::Axis(0), &keep);
    Ok(LoadedDataset {
        field: TrajectoryField::new(d.field.dim, positions)?,
        truth_labels: d.truth_labels.map(|t| keep.iter().map(|&i| t[i]).collect()),
        num_labels: d.num_labels,
    })
}

/// Runs every stage in memory.
pub fn execute(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let mut timings = Vec::new();

    let data = timed(&mut timings, "data", || load_subjects(cfg))?;
    run_stages(cfg, data, timings)
}

/// Runs every stage after loading on subjects already in memory. Data
/// sources named in `cfg` are ignored.
pub fn execute_on(cfg: &PipelineConfig, data: Vec<LoadedDataset>) -> Result<PipelineOutcome> {
    cfg.validate_params()?;
    if data.is_empty() {
        return Err(Error::Config("no subjects".into()));
    }
    run_stages(cfg, data, Vec::new())
}

fn run_stages(
    cfg: &PipelineConfig,
    data: Vec<LoadedDataset>,
    mut timings: Vec<StageTiming>,
) -> Result<PipelineOutcome> {
    let data = data
        .into_iter()
        .map(|d| subsample(d, cfg.stride))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("data"))?;
    let n_points = data[0].field.num_points();
    if data.iter().any(|d| d.field.num_points() != n_points) {
        return Err(Error::Shape("subjects must share the point count".into()).in_stage("data"));
    }
    let truth = data[0].truth_labels.clone();
    let clusters = match (cfg.clusters, data[0].num_labels) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            return Err(Error::Config("cluster count unknown: set clusters".into()).in_stage("data"))
        }
    };
    let k = cfg.k.unwrap_or(clusters);

    let features = timed(&mut timings, "features", || {
        data.iter()
            .map(|d| scale_to_unit(&build_feature_matrix(&d.field)?.u))
            .collect::<Result<Vec<_>>>()
    })?;
    let (us, scales): (Vec<_>, Vec<_>) = features.into_iter().unzip();

    let solver = cfg.solver_config(k);
    let laps = timed(&mut timings, "graph", || build_graphs(cfg, &us))?;
    let Factorization {
        pairs,
        w_star,
        objective_trace,
    } = timed(&mut timings, "factorize", || factorize(cfg, &solver, &us, &laps))?;

    let seed = Seed(cfg.seed);
    let sigma_for = |w: &NonNegMatrix<f64>| cfg.sigma.unwrap_or_else(|| median_column_distance(w));
    let (assignments, common_assignment) = timed(&mut timings, "cluster", || {
        let subjects = pairs
            .iter()
            .map(|p| cluster_weighting_map(&p.w, sigma_for(&p.w), clusters, seed))
            .collect::<Result<Vec<_>>>()?;
        let common = w_star
            .as_ref()
            .map(|w| cluster_weighting_map(w, sigma_for(w), clusters, seed))
            .transpose()?;
        Ok((subjects, common))
    })?;

    let evaluated = timed(&mut timings, "evaluate", || {
        let Some(truth) = &truth else {
            return Ok((vec![None; assignments.len()], None));
        };
        let subject_metrics = assignments
            .iter()
            .map(|a| MetricsReport::evaluate(&a.labels, truth).map(Some))
            .collect::<Result<Vec<_>>>()?;
        let common_metrics = match &common_assignment {
            Some(c) => {
                let mut m = MetricsReport::evaluate(&c.labels, truth)?;
                m.unit_size_stats = Some(unit_size_stats(&assignments, c)?);
                Some(m)
            }
            None => None,
        };
        Ok((subject_metrics, common_metrics))
    })?;
    let (subject_metrics, common_metrics) = evaluated;

    let subjects = pairs
        .into_iter()
        .zip(assignments)
        .zip(subject_metrics)
        .zip(scales)
        .map(|(((factors, assignment), metrics), feature_scale)| SubjectResult {
            feature_scale,
            factors,
            assignment,
            metrics,
        })
        .collect();
    let common = w_star.zip(common_assignment).map(|(w_star, assignment)| CommonResult {
        w_star,
        assignment,
        metrics: common_metrics,
    });
    Ok(PipelineOutcome {
        config: cfg.clone(),
        subjects,
        common,
        truth,
        objective_trace,
        timings,
    })
}

/// Feature graph Laplacians, or empty ones when the method has no graph term.
pub fn build_graphs(cfg: &PipelineConfig, us: &[NonNegMatrix<f64>]) -> Result<Vec<GraphLaplacian<f64>>> {
    let coupled = cfg.solver_config(1).beta > 0.0;
    us.iter()
        .map(|u| {
            if coupled {
                Ok(laplacian(&knn_heat_affinity(u, cfg.neighbors, cfg.bandwidth)?))
            } else {
                Ok(GraphLaplacian::empty(u.cols()))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub pairs: Vec<FactorPair<f64>>,
    /// Present for more than one subject.
    pub w_star: Option<NonNegMatrix<f64>>,
    pub objective_trace: Vec<f64>,
}

/// Factorizes every subject with `cfg.method`.
pub fn factorize(
    cfg: &PipelineConfig,
    solver: &SolverConfig<f64>,
    us: &[NonNegMatrix<f64>],
    laps: &[GraphLaplacian<f64>],
) -> Result<Factorization> {
    let joint = us.len() > 1;
    match cfg.method {
        Method::IstaGsNmfS | Method::IstaSNmfS => {
            if joint {
                let m = solve_joint(us, laps, solver)?;
                Ok(Factorization {
                    pairs: m.pairs,
                    w_star: Some(m.w_star),
                    objective_trace: m.objective_trace,
                })
            } else {
                let fit = solve_single(&us[0], &laps[0], solver)?;
                Ok(Factorization {
                    pairs: vec![fit.factors],
                    w_star: None,
                    objective_trace: fit.objective_trace,
                })
            }
        }
        Method::GNmfS | Method::GsNmfS => {
            let pairs = us
                .iter()
                .zip(laps)
                .map(|(u, lap)| {
                    if cfg.method == Method::GsNmfS {
                        solve_shallow_sparse(u, lap, solver)
                    } else {
                        let p = init_gnmf(u, solver.k, lap, solver.beta, solver.init_iters, solver.seed)?;
                        Ok(normalize_building_blocks(p))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let total = us
                .iter()
                .zip(laps)
                .zip(&pairs)
                .map(|((u, lap), p)| objective_single(u, &p.v, &p.w, lap, solver.lambda, solver.beta))
                .sum();
            let w_star = if joint {
                let ws: Vec<_> = pairs.iter().map(|p| p.w.clone()).collect();
                Some(weighted_mean(&ws, solver.alpha.as_deref())?)
            } else {
                None
            };
            Ok(Factorization {
                pairs,
                w_star,
                objective_trace: vec![total],
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub ac: Option<f64>,
    pub nmi: Option<f64>,
    pub eigengap: Option<f64>,
    pub feature_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub subjects: usize,
    pub points: usize,
    pub clusters: usize,
    pub timings: Vec<StageTiming>,
    pub objective_trace: Vec<f64>,
    pub metrics: Option<MetricsReport>,
    pub subject_summaries: Vec<SubjectSummary>,
    pub artifacts: Vec<Artifact>,
}

pub const REPORT_FILE: &str = "run_report.json";

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json_text(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("round,objective\n");
    for (i, v) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

fn write_subject(dir: &Path, s: &SubjectResult) -> Result<Vec<PathBuf>> {
    let files = [
        dir.join("V.csv"),
        dir.join("W.csv"),
        dir.join("labels.csv"),
        dir.join("cluster.json"),
    ];
    save_matrix_csv(&s.factors.v, &files[0])?;
    save_matrix_csv(&s.factors.w, &files[1])?;
    save_labels_csv(&s.assignment.labels, &files[2])?;
    write_text(&files[3], &json_text(&cluster_diagnostics(&s.assignment)))?;
    let mut out = files.to_vec();
    if let Some(m) = &s.metrics {
        let p = dir.join("metrics.json");
        write_text(&p, &json_text(m))?;
        out.push(p);
    }
    Ok(out)
}

pub fn cluster_diagnostics(a: &ClusterAssignment) -> serde_json::Value {
    serde_json::json!({ "K": a.k, "eigengap": a.eigengap, "inertia": a.inertia })
}

fn digest(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

/// Writes every artifact of `outcome` under `dir`, then the run report with
/// their digests.
pub fn write_outputs(outcome: &PipelineOutcome, dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let multi = outcome.subjects.len() > 1;
    for (i, s) in outcome.subjects.iter().enumerate() {
        if multi {
            let sub = dir.join(format!("subject_{:02}", i + 1));
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            files.extend(write_subject(&sub, s)?);
        } else {
            files.extend(write_subject(dir, s)?);
        }
    }
    if let Some(c) = &outcome.common {
        let p = dir.join("w_star.csv");
        save_matrix_csv(&c.w_star, &p)?;
        files.push(p);
        let p = dir.join("labels.csv");
        save_labels_csv(&c.assignment.labels, &p)?;
        files.push(p);
        let p = dir.join("cluster.json");
        write_text(&p, &json_text(&cluster_diagnostics(&c.assignment)))?;
        files.push(p);
        if let Some(m) = &c.metrics {
            let p = dir.join("metrics.json");
            write_text(&p, &json_text(m))?;
            files.push(p);
        }
    }
    if let Some(m) = outcome.primary_metrics() {
        let p = dir.join("contingency.csv");
        write_text(&p, &m.contingency.to_csv())?;
        files.push(p);
    }
    let p = dir.join("objective_trace.csv");
    write_text(&p, &trace_csv(&outcome.objective_trace))?;
    files.push(p);
    let p = dir.join("config.toml");
    write_text(&p, &outcome.config.to_toml())?;
    files.push(p);

    let artifacts = files
        .iter()
        .map(|f| {
            let (bytes, sha256) = digest(f)?;
            let rel = f.strip_prefix(dir).unwrap_or(f);
            Ok(Artifact {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes,
                sha256,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let report = RunReport {
        config: outcome.config.clone(),
        subjects: outcome.subjects.len(),
        points: outcome.primary_assignment().labels.len(),
        clusters: outcome.primary_assignment().k,
        timings: outcome.timings.clone(),
        objective_trace: outcome.objective_trace.clone(),
        metrics: outcome.primary_metrics().cloned(),
        subject_summaries: outcome
            .subjects
            .iter()
            .map(|s| SubjectSummary {
                ac: s.metrics.as_ref().map(|m| m.ac),
                nmi: s.metrics.as_ref().map(|m| m.nmi),
                eigengap: s.assignment.eigengap,
                feature_scale: s.feature_scale,
            })
            .collect(),
        artifacts,
    };
    write_text(&dir.join(REPORT_FILE), &json_text(&report))?;
    Ok(report)
}

/// `execute` followed by `write_outputs`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<RunReport> {
    let outcome = execute(cfg)?;
    write_outputs(&outcome, out)
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    C,
    H,
    Beta,
    Gamma,
    Sigma,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lambda" => SweepParam::Lambda,
            "c" => SweepParam::C,
            "h" | "H" => SweepParam::H,
            "beta" => SweepParam::Beta,
            "gamma" => SweepParam::Gamma,
            "sigma" => SweepParam::Sigma,
            _ => {
                return Err(Error::Config(format!(
                    "cannot sweep {s:?}; use lambda, c, h, beta, gamma or sigma"
                )))
            }
        })
    }
}

impl SweepParam {
    pub fn apply(self, cfg: &mut PipelineConfig, value: f64) -> Result<()> {
        match self {
            SweepParam::Lambda => cfg.lambda = value,
            SweepParam::C => cfg.c = StepSize::Fixed(value),
            SweepParam::H => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("H must be a positive integer, got {value}")));
                }
                cfg.h = value as usize;
            }
            SweepParam::Beta => cfg.beta = value,
            SweepParam::Gamma => cfg.gamma = value,
            SweepParam::Sigma => cfg.sigma = Some(value),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub ac: f64,
    pub nmi: f64,
    pub runtime_s: f64,
}

/// One run per value with everything else held fixed.
pub fn sweep(cfg: &PipelineConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            param.apply(&mut c, value)?;
            let start = Instant::now();
            let outcome = execute(&c)?;
            let runtime_s = start.elapsed().as_secs_f64();
            let m = outcome
                .primary_metrics()
                .ok_or_else(|| Error::Config("sweep needs truth labels".into()))?;
            Ok(SweepRow {
                value,
                ac: m.ac,
                nmi: m.nmi,
                runtime_s,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("value,ac,nmi,runtime_s\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.value, r.ac, r.nmi, r.runtime_s));
    }
    s
}
