use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn carshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carshift")).args(args).output().expect("binary runs")
}

/// Writes `config.toml` (plus optional sidecar files) and runs it into `out/`.
fn run_config(dir: &TempDir, config: &str, extra: &[&str]) -> Output {
    let path = dir.path().join("config.toml");
    fs::write(&path, config).unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    carshift(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_names_every_kind() {
    let o = carshift(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for kind in [
        "car-check", "quasifree-verify", "modular-verify", "innerness", "conjugacy", "extension", "approx",
        "blaschke", "prop2", "dilation-check", "pipeline",
    ] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind} missing");
    }
}

#[test]
fn car_check_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = "kind = \"car-check\"\nseed = 7\n[params]\nmodes = 4\n";
    assert_eq!(run_config(&dir, cfg, &[]).status.code(), Some(0));
    let first = fs::read(dir.path().join("out/car-check.csv")).unwrap();
    assert_eq!(run_config(&dir, cfg, &[]).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("out/car-check.csv")).unwrap());
    assert!(csv_rows(&dir.path().join("out/car-check.csv")).iter().all(|r| r[2] <= 1e-12));

    assert_eq!(run_config(&dir, cfg, &["--seed", "8"]).status.code(), Some(0));
    assert_ne!(first, fs::read(dir.path().join("out/car-check.csv")).unwrap());
    let report = json(&dir.path().join("out/car-check.json"));
    assert_eq!(report["seed"], 8);
    assert_eq!(report["verdicts"][0]["criterion"], 1);
}

#[test]
fn innerness_minus_identity_diverges() {
    let dir = TempDir::new().unwrap();
    let cfg = "kind = \"innerness\"\n[params]\nnu = 0.3\nw = \"minus-identity\"\nsizes = [4, 8, 16, 32, 64]\n";
    assert_eq!(run_config(&dir, cfg, &[]).status.code(), Some(0));
    for row in csv_rows(&dir.path().join("out/innerness.csv")) {
        assert!((row[1] - (0.84 * row[0]).sqrt()).abs() < 1e-13);
    }
    assert_eq!(json(&dir.path().join("out/innerness.json"))["extra"]["verdict"], "diverges");
}

#[test]
fn approx_reads_family_sidecar() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("lambda.txt"), "# single factor\n-1 0\n").unwrap();
    let cfg = "kind = \"approx\"\n[params]\nfamily = \"lambda.txt\"\nt_log2 = [-12, -4]\n";
    let o = run_config(&dir, cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let slope = json(&dir.path().join("out/approx.json"))["fits"]["defect_slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() <= 0.1);
}

#[test]
fn verdict_failure_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = "kind = \"approx\"\n[params]\ntolerance = 1e-4\n";
    let o = run_config(&dir, cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("out/approx.csv").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = run_config(&dir, "kind = \"nonsense\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = run_config(&dir, "kind = \"innerness\"\n[params]\nmu = 0.3\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.mu"), "{}", stderr(&o));

    let o = run_config(&dir, "kind = \"innerness\"\n[params]\nnu = \"high\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.nu") && stderr(&o).contains("f64"), "{}", stderr(&o));

    let o = run_config(&dir, "kind = \"car-check\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let o = run_config(&dir, "kind = \"approx\"\n[params]\nfamily = \"missing.txt\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("bad.txt"), "-1 0\n0.5 0\n").unwrap();
    let o = run_config(&dir, "kind = \"approx\"\n[params]\nfamily = \"bad.txt\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("condition (1)"), "{}", stderr(&o));

    assert_eq!(carshift(&["run"]).status.code(), Some(2));
}

#[test]
fn pipeline_default_passes() {
    let dir = TempDir::new().unwrap();
    let o = run_config(&dir, "kind = \"pipeline\"\n[params]\nnu = 0.25\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&dir.path().join("out/pipeline.json"));
    assert_eq!(report["extra"]["regime"], "III_lambda");
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["pass"] == true));
}

#[test]
fn pipeline_trace_regime_and_invalid_family() {
    let dir = TempDir::new().unwrap();
    let o = run_config(&dir, "kind = \"pipeline\"\n[params]\nnu = 0.5\n", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("out/pipeline.json"))["extra"]["regime"], "II_1");

    fs::write(dir.path().join("bad.txt"), "1 0\n").unwrap();
    let o = run_config(&dir, "kind = \"pipeline\"\n[params]\nfamily = \"bad.txt\"\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&dir.path().join("out/pipeline.json"));
    let first = &report["verdicts"][0];
    assert_eq!(first["check"], "condition1");
    assert_eq!(first["pass"], false);
}
