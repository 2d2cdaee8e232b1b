use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn funits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funits"))
        .args(args)
        .env_remove("FUNITS_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = funits(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn presets_lists_every_name() {
    let text = ok(&["presets"]);
    for name in ["sim2d", "sim3d-1", "sim3d-2", "cohort", "paper-2d", "paper-3d-1", "paper-3d-2", "paper-invivo"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("lambda=890 c=55"));
    let v: serde_json::Value = serde_json::from_str(&ok(&["presets", "--json"])).unwrap();
    let invivo = v
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "paper-invivo")
        .unwrap();
    assert_eq!(invivo["params"]["gamma"], 20.0);
    assert_eq!(invivo["params"]["lambda"], 800.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = funits(&["run", "--preset", "nope", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    let out = funits(&["run", "--dataset", s(&dir.path().join("missing")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data"));

    let out = funits(&["run", "--preset", "sim2d", "--method", "pca", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "preset = \"sim2d\"\nlamda = 3\n").unwrap();
    let out = funits(&["run", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let out = funits(&["sweep", "--preset", "sim2d", "--param", "h", "--values", "2.5", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_artifacts_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = ok(&["run", "--preset", "sim2d", "--stride", "4", "--seed", "3", "--out", s(&out)]);
    assert!(text.contains("AC"));
    for f in ["V.csv", "W.csv", "labels.csv", "objective_trace.csv", "metrics.json", "contingency.csv", "config.toml", "run_report.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report = json(&out.join("run_report.json"));
    assert_eq!(report["config"]["preset"], "sim2d");
    assert_eq!(report["config"]["stride"], 4);
    let stages: Vec<_> = report["timings"].as_array().unwrap().iter().map(|t| t["stage"].as_str().unwrap().to_owned()).collect();
    assert_eq!(stages, ["data", "features", "graph", "factorize", "cluster", "evaluate"]);
    for a in report["artifacts"].as_array().unwrap() {
        let bytes = fs::read(out.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"], bytes.len());
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
    }
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), report["points"].as_u64().unwrap() as usize);

    // the echoed config reproduces the run
    let again = dir.path().join("again");
    ok(&["run", "--config", s(&out.join("config.toml")), "--out", s(&again)]);
    for f in ["W.csv", "labels.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "preset = \"sim2d\"\nstride = 4\nh = 3\nmethod = \"ista-s-nmf-s\"\n").unwrap();
    let out = dir.path().join("o");
    ok(&["run", "--config", s(&cfg), "--h", "2", "--c", "auto", "--out", s(&out)]);
    let report = json(&out.join("run_report.json"));
    assert_eq!(report["config"]["h"], 2);
    assert_eq!(report["config"]["c"], "auto");
    assert_eq!(report["config"]["method"], "ista-s-nmf-s");
    assert_eq!(report["objective_trace"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_has_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    ok(&["sweep", "--preset", "sim2d", "--stride", "4", "--param", "lambda", "--values", "0,0.25", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "value,ac,nmi,runtime_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0,"));

    // a single value matches a plain run
    let one = dir.path().join("one");
    ok(&["sweep", "--preset", "sim2d", "--stride", "4", "--param", "lambda", "--values", "0.25", "--out", s(&one)]);
    let run = dir.path().join("run");
    ok(&["run", "--preset", "sim2d", "--stride", "4", "--lambda", "0.25", "--out", s(&run)]);
    let row = json(&one.join("sweep.json"))["rows"][0].clone();
    let m = json(&run.join("metrics.json"));
    assert_eq!(row["ac"], m["ac"]);
    assert_eq!(row["nmi"], m["nmi"]);
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["simulate", "--preset", "sim2d", "--seed", "2", "--out", s(&p("data"))]);
    assert!(p("data/manifest.json").exists());
    ok(&["features", "--dataset", s(&p("data")), "--out", s(&p("feat"))]);
    let meta = json(&p("feat/features.json"));
    assert_eq!(meta["rows"], 40);
    ok(&[
        "factorize", "--features", s(&p("feat/features.csv")), "--k", "3", "--lambda", "0.25", "--beta", "0.05",
        "--c", "10", "--h", "10", "--out", s(&p("fac")),
    ]);
    assert!(p("fac/W.csv").exists() && p("fac/V.csv").exists());
    ok(&["cluster", "--weights", s(&p("fac/W.csv")), "--clusters", "3", "--sigma", "0.5", "--out", s(&p("cl"))]);
    let diag = json(&p("cl/cluster.json"));
    assert_eq!(diag["K"], 3);
    assert!(diag["eigengap"].as_f64().unwrap() > 0.0);
    let text = ok(&["evaluate", "--labels", s(&p("cl/labels.csv")), "--truth", s(&p("data/truth_labels.csv")), "--out", s(&p("ev"))]);
    assert!(text.starts_with("AC "));
    let m = json(&p("ev/metrics.json"));
    assert!(m["ac"].as_f64().unwrap() >= 90.0, "{m}");
    assert!(fs::read_to_string(p("ev/contingency.csv")).unwrap().starts_with("label,1,2,3\n"));
}

#[test]
fn joint_factorize_writes_subjects_and_common_map() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["simulate", "--preset", "sim2d", "--seed", "1", "--out", s(&p("a"))]);
    ok(&["simulate", "--preset", "sim2d", "--seed", "2", "--out", s(&p("b"))]);
    ok(&["features", "--dataset", s(&p("a")), "--dataset", s(&p("b")), "--out", s(&p("f"))]);
    ok(&[
        "factorize", "--features", s(&p("f/subject_01/features.csv")), "--features",
        s(&p("f/subject_02/features.csv")), "--k", "3", "--gamma", "1", "--h", "5", "--out", s(&p("j")),
    ]);
    for f in ["subject_01/W.csv", "subject_02/V.csv", "w_star.csv", "objective_trace.csv", "factorize.json"] {
        assert!(p("j").join(f).exists(), "{f} missing");
    }
    assert_eq!(json(&p("j/factorize.json"))["subjects"], 2);
}
