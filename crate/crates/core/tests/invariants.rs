use std::path::Path;

use odl::analysis::{Portrait, Subdomain};
use odl::dynamics::{hamiltonian, to_cartesian, to_polar, AngleBranch, CartesianPhaseState, OrbitParams, PolarPhaseState};
use odl::io;
use odl::odeint::{integrate, integrate_characteristic, IntegratorConfig, PhaseField, SnapshotPlan};
use odl::scenario::{builtin_scenarios, ScenarioConfig};
use odl::stochastics::RngStream;

fn params(c: f64, w: f64) -> OrbitParams {
    builtin_scenarios()[0].orbit_params().map(|p| OrbitParams { c, w, ..p }).unwrap()
}

fn flow(p: &OrbitParams, x: [f64; 2], t: f64, cfg: &IntegratorConfig) -> [f64; 2] {
    let plan = SnapshotPlan::new(0.0, t, t).unwrap();
    integrate(&PhaseField { params: *p }, x, &plan, cfg).unwrap().snapshots.last().unwrap().1
}

#[test]
fn transported_density_matches_flow_jacobian() {
    let p = params(0.15, 0.409);
    let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
    let t = 0.75;
    let plan = SnapshotPlan::new(0.0, t, t).unwrap();
    let h = 1e-6;
    for (phi, e) in [(2.2, 0.15), (0.5, 0.1), (0.3, 0.23), (4.0, 0.4)] {
        let x0 = to_cartesian(PolarPhaseState { phi, e });
        let ch = integrate_characteristic(x0, 0.0, &p, &plan, &cfg).unwrap();
        let ln_n = ch.points.last().unwrap().ln_n;
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut a = [x0.x1, x0.x2];
            let mut b = a;
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (flow(&p, a, t, &cfg), flow(&p, b, t, &cfg));
            for i in 0..2 {
                jac[i][k] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        assert!((ln_n + det.ln()).abs() < 1e-6, "({phi}, {e}): ln n {ln_n}, ln det {}", det.ln());
    }
}

#[test]
fn subdomain_is_constant_along_trajectories() {
    let p = params(0.15, 0.409);
    let portrait = Portrait::compute(&p).unwrap();
    let cfg = IntegratorConfig::default();
    let plan = SnapshotPlan::new(0.0, 3.0, 0.1).unwrap();
    let mut rng = RngStream::new(11);
    let mut checked = 0;
    while checked < 50 {
        let s = PolarPhaseState { phi: std::f64::consts::TAU * rng.next_f64(), e: 0.02 + 0.5 * rng.next_f64() };
        let start = portrait.classify(s).unwrap();
        if !matches!(start, Subdomain::SubD1 | Subdomain::SubD2 | Subdomain::SubD3) {
            continue;
        }
        let x0 = to_cartesian(s);
        let tr = integrate(&PhaseField { params: p }, [x0.x1, x0.x2], &plan, &cfg).unwrap();
        for (t, y) in &tr.snapshots {
            let q = to_polar(CartesianPhaseState { x1: y[0], x2: y[1] }, AngleBranch::ZeroToTwoPi);
            let label = portrait.classify(q).unwrap();
            assert!(label == start || label == Subdomain::Boundary, "{s:?} left {start} for {label} at t = {t}");
        }
        checked += 1;
    }
}

#[test]
fn without_radiation_eccentricity_and_density_are_frozen() {
    let p = params(0.0, 0.409);
    let cfg = IntegratorConfig::default();
    let plan = SnapshotPlan::new(0.0, 2.0, 0.5).unwrap();
    for (phi, e) in [(0.0, 0.05), (1.0, 0.3), (5.5, 0.7)] {
        let ch = integrate_characteristic(to_cartesian(PolarPhaseState { phi, e }), -1.25, &p, &plan, &cfg).unwrap();
        let h0 = hamiltonian(PolarPhaseState { phi, e }, &p).unwrap();
        for pt in &ch.points {
            let q = to_polar(pt.state, AngleBranch::ZeroToTwoPi);
            assert!((q.e - e).abs() < 1e-9, "e drifted to {} from {e}", q.e);
            assert_eq!(pt.ln_n, -1.25);
            assert!((hamiltonian(q, &p).unwrap() - h0).abs() < 1e-9);
        }
    }
}

#[test]
fn rng_stream_golden_vector() {
    let mut rng = RngStream::new(42);
    let got: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
    assert_eq!(got, [0xbdd7_3226_2feb_6e95, 0x28ef_e333_b266_f103, 0x4752_6757_130f_9f52, 0x581c_e1ff_0e4a_e394]);
    assert_eq!(RngStream::new(42).next_f64(), 0.7415648787718233);
    let mut jump = RngStream::at(42, 2);
    assert_eq!(jump.next_u64(), got[2]);
}

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|f| {
            let path = f.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn builtin_scenarios_are_in_the_config_corpus() {
    let seeds = corpus("config_toml");
    for cfg in builtin_scenarios() {
        let file = format!("{}.toml", cfg.name);
        let (_, text) = seeds.iter().find(|(n, _)| *n == file).unwrap_or_else(|| panic!("missing seed {file}"));
        assert_eq!(ScenarioConfig::from_toml_str(text).unwrap(), cfg);
    }
}

#[test]
fn fuzz_corpus_replays_cleanly() {
    let mut parsed = 0;
    for (name, text) in corpus("config_toml") {
        if let Ok(v) = ScenarioConfig::from_toml_str(&text) {
            assert_eq!(ScenarioConfig::from_toml_str(&v.to_toml_string().unwrap()).unwrap(), v, "{name}");
            parsed += 1;
        }
    }
    for (name, text) in corpus("split_library_csv") {
        if let Ok(v) = io::library_from_csv(&text) {
            assert_eq!(io::library_from_csv(&io::library_to_csv(&v).unwrap()).unwrap(), v, "{name}");
            parsed += 1;
        }
    }
    for (name, text) in corpus("mixture_json") {
        if let Ok(v) = io::mixture_from_json(&text) {
            assert_eq!(io::mixture_from_json(&io::mixture_to_json(&v).unwrap()).unwrap(), v, "{name}");
            parsed += 1;
        }
    }
    for (name, text) in corpus("joint_grid_csv") {
        if let Ok(v) = io::joint_from_csv(&text) {
            assert_eq!(io::joint_from_csv(&io::joint_to_csv(&v).unwrap()).unwrap(), v, "{name}");
            parsed += 1;
        }
    }
    assert!(parsed >= 10);
}
