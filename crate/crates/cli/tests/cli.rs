use std::path::Path;
use std::process::{Command, Output};

use odl::io::{self, RunManifest};
use odl::scenario::builtin_scenario;

fn odl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odl"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn odl")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn portrait_emits_five_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = odl(dir.path(), &["portrait", "--C", "0.15", "--W", "0.409", "--resolution", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("portrait/stationary_points.csv"));
    assert_eq!(csv.lines().count(), 6);
    let labels = read(dir.path().join("portrait/subdomains.csv"));
    assert_eq!(labels.lines().count(), 1 + 40 * 40);
    assert!(labels.contains("SubD1") && labels.contains("SubD2") && labels.contains("SubD3"));
    assert!(read(dir.path().join("portrait/contours.csv")).lines().count() > 100);
}

#[test]
fn gmmut_run_reproduces_initial_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = odl(dir.path(), &["run", "--scenario", "1", "--method", "gmmut"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("scenario-1/gmm-ut");
    let moments = read(root.join("moments.csv"));
    let row: Vec<f64> = moments.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let expect = [0.0, 2.2069, std::f64::consts::PI / 16.0, 0.145, 0.025];
    for (got, want) in row.iter().zip(expect) {
        assert!((got - want).abs() < 1e-12, "{row:?}");
    }
    let mix = io::mixture_from_json(&read(root.join("mixture_t0.json"))).unwrap();
    assert_eq!(mix.components.len(), 39);
    for f in ["joint_t0.csv", "marginal_phi_t2.csv", "marginal_e_t2.csv", "timing.json", "manifest.json"] {
        assert!(root.join(f).exists(), "{f}");
    }
    let joint = io::joint_from_csv(&read(root.join("joint_t2.csv"))).unwrap();
    assert!(joint.values.iter().all(|d| d.is_finite() && *d >= 0.0));
}

#[test]
fn run_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: &str| {
        let out = odl(&dir.path().join(sub), &["run", "--scenario", "3", "--method", "mc", "--seed", seed]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read(dir.path().join(sub).join("scenario-3/mc/moments.csv"))
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn manifest_round_trips_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin_scenario(2).unwrap();
    cfg.name = "custom".into();
    cfg.t_u = 1.0;
    cfg.n_sam = 500;
    let path = dir.path().join("custom.toml");
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let out = odl(dir.path(), &["run", "--config", path.to_str().unwrap(), "--method", "dee"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = RunManifest::from_json(&read(dir.path().join("custom/dee/manifest.json"))).unwrap();
    let mut expect = cfg.clone();
    expect.method = odl::histogram::Method::Dee;
    assert_eq!(manifest.configs, vec![expect]);
    assert!(manifest.files.iter().any(|f| f == "joint_t1.csv"));
}

#[test]
fn compare_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin_scenario(3).unwrap();
    cfg.t_u = 0.5;
    let path = dir.path().join("short.toml");
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let out = odl(dir.path(), &["compare", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("scenario-3/compare");
    let header = read(root.join("moments.csv"));
    for case in ["MC", "DEE-961", "DEE-1E5", "GMM-UT"] {
        assert!(header.lines().next().unwrap().contains(case), "{case}");
        assert!(root.join(case).join("joint_t0.5.csv").exists(), "{case}");
    }
    let errors = read(root.join("relative_errors.csv"));
    assert_eq!(errors.lines().count(), 1 + 3 * 2);
    let timing: serde_json::Value = serde_json::from_str(&read(root.join("timing.json"))).unwrap();
    assert_eq!(timing[0]["normalized"].as_f64(), Some(1.0));
}

#[test]
fn bad_input_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut cfg = builtin_scenario(1).unwrap().to_toml_string().unwrap();
    cfg = cfg.replace("n_sam = 10000", "n_sam = 0");
    std::fs::write(&path, cfg).unwrap();
    let out = odl(dir.path(), &["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(&path, "name = 3").unwrap();
    let out = odl(dir.path(), &["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn split_library_round_trips_via_check() {
    let dir = tempfile::tempdir().unwrap();
    assert!(odl(dir.path(), &["split-lib", "--n", "39"]).status.success());
    let file = dir.path().join("split_library_39.csv");
    let lib = io::library_from_csv(&read(&file)).unwrap();
    assert_eq!(lib.len(), 39);
    let out = odl(dir.path(), &["split-lib", "--check", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("39 components"));
}
