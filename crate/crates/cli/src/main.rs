use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use funits::cluster::cluster_weighting_map;
use funits::csv_io::{load_labels_csv, load_matrix_csv, save_labels_csv, save_matrix_csv};
use funits::dataset_io::{load_dataset, save_dataset};
use funits::features::build_feature_matrix;
use funits::matrix::{scale_to_unit, NonNegMatrix};
use funits::metrics::MetricsReport;
use funits::pipeline::{
    build_graphs, cluster_diagnostics, execute, factorize, sweep, sweep_csv, trace_csv, write_outputs,
    Method, PipelineConfig, SweepParam,
};
use funits::presets::{list_presets, list_presets_json, preset};
use funits::{Error, Result, Seed};

#[derive(Parser)]
#[command(name = "funits", version, about = "Functional units from motion trajectories")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "FUNITS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a preset scenario.
    Simulate {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build scaled motion-feature matrices from datasets.
    Features {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Factorize feature matrices; several `--features` give a joint solve.
    Factorize {
        #[arg(long = "features", required = true)]
        features: Vec<PathBuf>,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering of a weighting map.
    Cluster {
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted labels against truth.
    Evaluate {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage and write a report.
    Run {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run once per parameter value.
    Sweep {
        #[command(flatten)]
        params: Params,
        /// One of lambda, c, h, beta, gamma, sigma.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in presets.
    Presets {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Default)]
struct Params {
    /// TOML file of pipeline keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Dataset manifest or directory; repeat for a cohort.
    #[arg(long = "dataset")]
    datasets: Vec<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Step constant, or "auto".
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    init_iters: Option<usize>,
    #[arg(long)]
    outer_rounds: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Params {
    fn overrides(&self) -> Result<toml::Table> {
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: toml::Value| {
            t.insert(k.into(), v);
        };
        let int = |n: usize| toml::Value::Integer(n as i64);
        if let Some(v) = &self.preset {
            put("preset", v.clone().into());
        }
        if !self.datasets.is_empty() {
            let paths = self.datasets.iter().map(|p| p.display().to_string().into()).collect();
            put("datasets", toml::Value::Array(paths));
        }
        if let Some(v) = self.method {
            put("method", v.as_str().into());
        }
        if let Some(v) = self.seed {
            let v = i64::try_from(v).map_err(|_| Error::Config("seed must fit in i64".into()))?;
            put("seed", v.into());
        }
        for (key, v) in [
            ("clusters", self.clusters),
            ("k", self.k),
            ("h", self.h),
            ("init_iters", self.init_iters),
            ("outer_rounds", self.outer_rounds),
            ("neighbors", self.neighbors),
            ("stride", self.stride),
        ] {
            if let Some(v) = v {
                put(key, int(v));
            }
        }
        for (key, v) in [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("tol", self.tol),
            ("bandwidth", self.bandwidth),
            ("sigma", self.sigma),
        ] {
            if let Some(v) = v {
                put(key, v.into());
            }
        }
        if let Some(c) = &self.c {
            let v = if c == "auto" {
                c.clone().into()
            } else {
                c.parse::<f64>()
                    .map_err(|_| Error::Config(format!("c must be a number or \"auto\", got {c:?}")))?
                    .into()
            };
            put("c", v);
        }
        Ok(t)
    }

    fn resolve(&self) -> Result<PipelineConfig> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => None,
        };
        PipelineConfig::resolve(text.as_deref(), self.overrides()?)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `out` itself for one subject, `out/subject_XX` for several.
fn subject_dir(out: &Path, i: usize, n: usize) -> Result<PathBuf> {
    let dir = if n == 1 { out.to_path_buf() } else { out.join(format!("subject_{:02}", i + 1)) };
    create_dir(&dir)?;
    Ok(dir)
}

fn simulate(params: &Params, out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let name = cfg
        .preset
        .as_deref()
        .ok_or_else(|| Error::Config("simulate needs --preset".into()))?;
    let subjects = preset(name)?.scenario.generate(Seed(cfg.seed))?;
    create_dir(out)?;
    let n = subjects.len();
    let mut dirs = Vec::new();
    for (i, d) in subjects.iter().enumerate() {
        let dir = subject_dir(out, i, n)?;
        save_dataset(d, &dir)?;
        dirs.push(dir.strip_prefix(out).unwrap_or(&dir).display().to_string());
    }
    if n > 1 {
        write_json(
            &out.join("cohort.json"),
            &serde_json::json!({ "preset": name, "seed": cfg.seed, "subjects": dirs }),
        )?;
    }
    println!("{name}: {n} subject(s), {} points, {} frames", subjects[0].num_points(), subjects[0].num_frames());
    Ok(())
}

fn features(params: &Params, out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    if cfg.datasets.is_empty() {
        return Err(Error::Config("features needs --dataset".into()));
    }
    create_dir(out)?;
    let n = cfg.datasets.len();
    for (i, path) in cfg.datasets.iter().enumerate() {
        let d = load_dataset(path)?;
        let fm = build_feature_matrix(&d.field)?;
        let (u, scale) = scale_to_unit(&fm.u)?;
        let dir = subject_dir(out, i, n)?;
        save_matrix_csv(&u, dir.join("features.csv"))?;
        write_json(
            &dir.join("features.json"),
            &serde_json::json!({
                "dataset": path.display().to_string(),
                "rows": u.rows(),
                "cols": u.cols(),
                "points": fm.point_count,
                "frames": fm.frame_count,
                "scale": scale,
            }),
        )?;
        println!("{}: {}x{} features, scale {scale}", path.display(), u.rows(), u.cols());
    }
    Ok(())
}

fn load_nonneg(path: &Path) -> Result<NonNegMatrix<f64>> {
    NonNegMatrix::try_from(load_matrix_csv::<f64>(path)?)
}

fn factorize_cmd(paths: &[PathBuf], params: &Params, out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let k = cfg
        .k
        .or(cfg.clusters)
        .ok_or_else(|| Error::Config("factorize needs --k".into()))?;
    let us = paths.iter().map(|p| load_nonneg(p)).collect::<Result<Vec<_>>>()?;
    let laps = build_graphs(&cfg, &us).map_err(|e| e.in_stage("graph"))?;
    let fit = factorize(&cfg, &cfg.solver_config(k), &us, &laps).map_err(|e| e.in_stage("factorize"))?;
    create_dir(out)?;
    let n = fit.pairs.len();
    for (i, p) in fit.pairs.iter().enumerate() {
        let dir = subject_dir(out, i, n)?;
        save_matrix_csv(&p.v, dir.join("V.csv"))?;
        save_matrix_csv(&p.w, dir.join("W.csv"))?;
    }
    if let Some(w) = &fit.w_star {
        save_matrix_csv(w, out.join("w_star.csv"))?;
    }
    let trace = out.join("objective_trace.csv");
    fs::write(&trace, trace_csv(&fit.objective_trace)).map_err(|e| Error::io(&trace, e))?;
    write_json(
        &out.join("factorize.json"),
        &serde_json::json!({
            "method": cfg.method.as_str(),
            "k": k,
            "subjects": n,
            "features": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "objective_final": fit.objective_trace.last(),
        }),
    )?;
    println!("{}: {n} subject(s), k = {k}, objective {:?}", cfg.method, fit.objective_trace.last());
    Ok(())
}

fn cluster_cmd(weights: &Path, params: &Params, out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let k = cfg
        .clusters
        .ok_or_else(|| Error::Config("cluster needs --clusters".into()))?;
    let w = load_nonneg(weights)?;
    let sigma = cfg
        .sigma
        .unwrap_or_else(|| funits::cluster::median_column_distance(&w));
    let a = cluster_weighting_map(&w, sigma, k, Seed(cfg.seed)).map_err(|e| e.in_stage("cluster"))?;
    create_dir(out)?;
    save_labels_csv(&a.labels, out.join("labels.csv"))?;
    let mut diag = cluster_diagnostics(&a);
    diag["sigma"] = sigma.into();
    diag["sizes"] = a.label_counts().into();
    write_json(&out.join("cluster.json"), &diag)?;
    println!("K = {k}, sigma {sigma}, eigengap {:?}", a.eigengap);
    Ok(())
}

fn evaluate_cmd(labels: &Path, truth: &Path, out: &Path) -> Result<()> {
    let m = MetricsReport::evaluate(&load_labels_csv(labels)?, &load_labels_csv(truth)?)?;
    create_dir(out)?;
    write_json(&out.join("metrics.json"), &serde_json::to_value(&m).expect("serializable"))?;
    let p = out.join("contingency.csv");
    fs::write(&p, m.contingency.to_csv()).map_err(|e| Error::io(&p, e))?;
    println!("AC {:.2} NMI {:.2}", m.ac, m.nmi);
    Ok(())
}

fn run_cmd(params: &Params, out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let outcome = execute(&cfg)?;
    let report = write_outputs(&outcome, out)?;
    let total: f64 = report.timings.iter().map(|t| t.seconds).sum();
    match &report.metrics {
        Some(m) => println!("{}: AC {:.2} NMI {:.2} ({total:.2} s)", cfg.method, m.ac, m.nmi),
        None => println!("{}: {} points clustered ({total:.2} s)", cfg.method, report.points),
    }
    Ok(())
}

fn sweep_cmd(params: &Params, param: &str, values: &[f64], out: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let which: SweepParam = param.parse()?;
    let rows = sweep(&cfg, which, values)?;
    create_dir(out)?;
    let p = out.join("sweep.csv");
    fs::write(&p, sweep_csv(&rows)).map_err(|e| Error::io(&p, e))?;
    write_json(
        &out.join("sweep.json"),
        &serde_json::json!({ "param": which, "values": values, "config": cfg, "rows": rows }),
    )?;
    for r in &rows {
        println!("{param}={} AC {:.2} NMI {:.2} ({:.2} s)", r.value, r.ac, r.nmi, r.runtime_s);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { params, out } => simulate(&params, &out),
        Command::Features { params, out } => features(&params, &out),
        Command::Factorize { features, params, out } => factorize_cmd(&features, &params, &out),
        Command::Cluster { weights, params, out } => cluster_cmd(&weights, &params, &out),
        Command::Evaluate { labels, truth, out } => evaluate_cmd(&labels, &truth, &out),
        Command::Run { params, out } => run_cmd(&params, &out),
        Command::Sweep {
            params,
            param,
            values,
            out,
        } => sweep_cmd(&params, &param, &values, &out),
        Command::Presets { json } => {
            if json {
                println!("{}", list_presets_json());
            } else {
                print!("{}", list_presets());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
