use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use odl::analysis::{hamiltonian_contours, timing_ledger, Portrait, TimingLedger};
use odl::dynamics::{OrbitParams, PhysicalConstants, PolarPhaseState};
use odl::exec::Executor;
use odl::gmmut::{build_split_library, cached_split_library, run_gmmut};
use odl::io::{self, OutputDir, RunManifest};
use odl::propagators::{run_dee, run_mc, RunOutput, AXIS_LABELS};
use odl::scenario::{builtin_scenario, Case, Scale, ScenarioConfig};
use odl::validation::{run_cases, run_suite, SuiteOptions};
use odl::{Error, Result};

#[derive(Parser)]
#[command(name = "odl", version, about = "Phase-space density propagation under SRP and J2")]
struct Cli {
    /// Worker threads; 0 uses all cores, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output root directory.
    #[arg(long, global = true, env = "ODL_OUT_DIR", default_value = "odl-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary points, H contours and sub-domain labels.
    Portrait(PortraitArgs),
    /// Run one method on one scenario.
    Run(RunArgs),
    /// Run all four cases on one scenario and compare against MC.
    Compare(ScenarioArgs),
    /// Build (or check) a univariate split library.
    SplitLib(SplitLibArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
    /// Print a scenario as TOML, as a starting point for --config.
    Config(ScenarioArgs),
}

#[derive(Args)]
struct PortraitArgs {
    #[arg(long = "C", default_value_t = 0.15)]
    c: f64,
    #[arg(long = "W", default_value_t = 0.409)]
    w: f64,
    /// Nodes per axis of the contour and label grids.
    #[arg(long, default_value_t = 200)]
    resolution: usize,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario index (1-3).
    #[arg(long, default_value_t = 1, conflicts_with = "config")]
    scenario: usize,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full-scale case presets.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mc,
    Dee,
    Gmmut,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "mc")]
    method: MethodArg,
}

#[derive(Args)]
struct SplitLibArgs {
    /// Number of components (odd, at most 39).
    #[arg(long, default_value_t = 39)]
    n: usize,
    /// Validate an existing library file instead of building one.
    #[arg(long)]
    check: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    full_scale: bool,
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_toml_str(&std::fs::read_to_string(path)?)?,
        None => builtin_scenario(args.scenario)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn scale(full: bool) -> Scale {
    if full {
        Scale::Full
    } else {
        Scale::Desk
    }
}

fn write_snapshots(dir: &mut OutputDir, prefix: &str, out: &RunOutput) -> Result<()> {
    for s in &out.snapshots {
        let tag = io::time_tag(s.time);
        dir.write(&format!("{prefix}joint_{tag}.csv"), &io::joint_to_csv(&s.joint)?)?;
        for (m, label) in s.marginals.iter().zip(AXIS_LABELS) {
            dir.write(&format!("{prefix}marginal_{label}_{tag}.csv"), &io::marginal_to_csv(m, label)?)?;
        }
        if let Some(mix) = &s.mixture {
            dir.write(&format!("{prefix}mixture_{tag}.json"), &io::mixture_to_json(mix)?)?;
        }
    }
    Ok(())
}

fn finish_manifest(dir: &mut OutputDir, mut manifest: RunManifest) -> Result<()> {
    manifest.files = dir.files.clone();
    manifest.files.push("manifest.json".into());
    let text = manifest.to_json()?;
    dir.write("manifest.json", &text)
}

fn run_method(cfg: &ScenarioConfig, method: MethodArg, exec: &Executor) -> Result<RunOutput> {
    match method {
        MethodArg::Mc => run_mc(cfg, exec),
        MethodArg::Dee => run_dee(cfg, None, exec),
        MethodArg::Gmmut => {
            let lib = cached_split_library(cfg.n_1d)?;
            run_gmmut(cfg, &lib, None, exec)
        }
    }
}

fn cmd_run(args: &RunArgs, root: &std::path::Path, exec: &Executor) -> Result<()> {
    let base = load_scenario(&args.scenario)?;
    let case = match args.method {
        MethodArg::Mc => Case::Mc,
        MethodArg::Dee => Case::DeeLarge,
        MethodArg::Gmmut => Case::GmmUt,
    };
    let cfg = if args.scenario.full_scale {
        case.configure(&base, Scale::Full)
    } else {
        ScenarioConfig { method: case.method(), ..base }
    };
    let out = run_method(&cfg, args.method, exec)?;
    let label = out.method.to_string();
    let mut dir = OutputDir::new(root.join(&cfg.name).join(label.to_lowercase()))?;
    write_snapshots(&mut dir, "", &out)?;
    let moments = out.moments();
    dir.write("moments.csv", &io::moments_to_csv(&[(&label, &moments)])?)?;
    let ledger = timing_ledger(&label, out.times, None);
    dir.write("timing.json", &io::timing_to_json(std::slice::from_ref(&ledger))?)?;
    let mut manifest = RunManifest::new("run");
    manifest.configs.push(cfg.clone());
    manifest.timings.push(ledger);
    manifest.warnings = out.warnings.clone();
    if !out.failures.is_empty() {
        manifest.warnings.push(format!("{} samples failed to integrate", out.failures.len()));
    }
    finish_manifest(&mut dir, manifest)?;
    println!("{label} on {}: {} snapshots written to {}", cfg.name, out.snapshots.len(), dir.root.display());
    for m in &moments {
        println!(
            "  t = {:<4} mu_phi {:.5} sigma_phi {:.5} mu_e {:.5} sigma_e {:.5}",
            m.time, m.mu_phi, m.sigma_phi, m.mu_e, m.sigma_e
        );
    }
    Ok(())
}

fn cmd_compare(args: &ScenarioArgs, root: &std::path::Path, exec: &Executor) -> Result<()> {
    let base = load_scenario(args)?;
    let runs = run_cases(&base, scale(args.full_scale), exec)?;
    let mut dir = OutputDir::new(root.join(&base.name).join("compare"))?;
    let mut manifest = RunManifest::new("compare");
    let moments: Vec<(Case, Vec<_>)> = runs.runs.iter().map(|(c, o)| (*c, o.moments())).collect();
    for (case, out) in &runs.runs {
        write_snapshots(&mut dir, &format!("{}/", case.label()), out)?;
        manifest.configs.push(case.configure(&base, scale(args.full_scale)));
        manifest.warnings.extend(out.warnings.iter().map(|w| format!("{}: {w}", case.label())));
    }
    let table: Vec<(&str, &[_])> = moments.iter().map(|(c, m)| (c.label(), m.as_slice())).collect();
    dir.write("moments.csv", &io::moments_to_csv(&table)?)?;
    let reference = &moments[0].1;
    dir.write("relative_errors.csv", &io::relative_errors_to_csv(reference, &table[1..])?)?;
    let mc_t = timing_ledger("MC", runs.get(Case::Mc).times, None).t_cal;
    let ledgers: Vec<TimingLedger> =
        runs.runs.iter().map(|(c, o)| timing_ledger(c.label(), o.times, Some(mc_t))).collect();
    dir.write("timing.json", &io::timing_to_json(&ledgers)?)?;
    manifest.timings = ledgers.clone();
    finish_manifest(&mut dir, manifest)?;
    println!("compare on {}: outputs in {}", base.name, dir.root.display());
    for l in &ledgers {
        println!("  {:<8} t_cal {:.3} s (t_prop {:.3}, t_int {:.3})", l.label, l.t_cal, l.t_prop, l.t_int);
    }
    Ok(())
}

fn cmd_portrait(args: &PortraitArgs, root: &std::path::Path) -> Result<()> {
    let consts = PhysicalConstants::default();
    let a = 2.5 * consts.earth_radius;
    let params = OrbitParams::new(a, args.c, args.w)?;
    let search = odl::analysis::find_stationary_points(&params)?;
    let mut dir = OutputDir::new(root.join("portrait"))?;
    let mut manifest = RunManifest::new("portrait");
    manifest.warnings = search.warnings.clone();
    dir.write("stationary_points.csv", &io::stationary_points_to_csv(&search.points)?)?;
    let n = args.resolution.max(2);
    let mut levels: Vec<f64> = search.points.iter().map(|p| p.hamiltonian).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let e_max = 0.95;
    match Portrait::new(params, search.points.clone()) {
        Ok(portrait) => {
            let [lo, _, _, hi] = portrait.levels();
            levels.extend((1..10).map(|k| lo + (hi - lo) * k as f64 / 10.0));
            let mut rows = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let phi = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
                    let e = e_max * (j as f64 + 0.5) / n as f64;
                    let label = portrait.classify(PolarPhaseState { phi, e })?;
                    rows.push((phi, e, label.to_string()));
                }
            }
            dir.write("subdomains.csv", &io::labels_to_csv(&rows)?)?;
        }
        Err(e) => manifest.warnings.push(format!("sub-domain labels skipped: {e}")),
    }
    let contours = hamiltonian_contours(&params, &levels, [n, n], e_max)?;
    dir.write("contours.csv", &io::contours_to_csv(&contours)?)?;
    finish_manifest(&mut dir, manifest)?;
    println!("{} stationary points (C = {}, W = {}):", search.points.len(), args.c, args.w);
    for p in &search.points {
        println!("  phi {:.7} e {:.7} H {:.7} {:?}", p.phi, p.e, p.hamiltonian, p.kind);
    }
    Ok(())
}

fn cmd_split_lib(args: &SplitLibArgs, root: &std::path::Path) -> Result<()> {
    if let Some(path) = &args.check {
        let lib = io::library_from_csv(&std::fs::read_to_string(path)?)?;
        println!("{}: {} components, sigma {:.7}, L2^2 {:.3e}", path.display(), lib.len(), lib.sigma, lib.l2_distance_sq());
        return Ok(());
    }
    let start = Instant::now();
    let lib = build_split_library(args.n)?;
    let mut dir = OutputDir::new(root)?;
    let name = format!("split_library_{}.csv", args.n);
    dir.write(&name, &io::library_to_csv(&lib)?)?;
    println!(
        "{} components: sigma {:.7}, L2^2 {:.3e}, built in {:.2} s, written to {}",
        lib.len(),
        lib.sigma,
        lib.l2_distance_sq(),
        start.elapsed().as_secs_f64(),
        dir.root.join(name).display()
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs, root: &std::path::Path, exec: &Executor) -> Result<bool> {
    let reports = run_suite(SuiteOptions { full_scale: args.full_scale }, exec, |r| println!("{}", r.line()));
    let mut dir = OutputDir::new(root)?;
    let text = serde_json::to_string_pretty(&reports).map_err(|e| Error::Parse(e.to_string()))?;
    dir.write("validation.json", &text)?;
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed} of {} checks passed", reports.len());
    Ok(passed == reports.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = match Executor::new(cli.workers) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Portrait(a) => cmd_portrait(a, &cli.out).map(|_| true),
        Command::Run(a) => cmd_run(a, &cli.out, &exec).map(|_| true),
        Command::Compare(a) => cmd_compare(a, &cli.out, &exec).map(|_| true),
        Command::SplitLib(a) => cmd_split_lib(a, &cli.out).map(|_| true),
        Command::Validate(a) => cmd_validate(a, &cli.out, &exec),
        Command::Config(a) => load_scenario(a).and_then(|c| c.to_toml_string()).map(|t| {
            print!("{t}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Error::Validation(list)) => {
            eprintln!("error: invalid configuration:");
            for v in list {
                eprintln!("  - {v}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
