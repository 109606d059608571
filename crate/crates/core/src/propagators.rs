//! End-to-end Monte Carlo and density-evolution pipelines.

use serde::Serialize;

use crate::analysis::{sample_moments, MomentAccumulator, MomentSummary, PhaseTimes, Stopwatch};
use crate::dynamics::{
    critical_eccentricity, to_cartesian, to_polar, AngleBranch, CartesianPhaseState, PhysicalConstants,
    PolarPhaseState,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{axis_nodes, bounding_box, delaunay, interp_row};
use crate::gmmut::GaussianMixture;
use crate::histogram::{make_edges, marginal, mc_joint, BinGrid, JointDensityGrid, MarginalDensity, Method, WeightAccumulator};
use crate::odeint::{integrate, integrate_characteristic, PhaseField};
use crate::scenario::ScenarioConfig;
use crate::stochastics::{ln_pdf_gaussian2d, sample_gaussian2d, Gaussian2D, RngStream};

/// Largest tolerated fraction of failed sample integrations.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;
/// Grid rows handed to one worker during density reconstruction.
pub const ROW_CHUNK: usize = 16;

pub const AXIS_LABELS: [&str; 2] = ["phi", "e"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub state: CartesianPhaseState,
    pub ln_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotResult {
    pub time: f64,
    /// Sample positions in (phi, e); empty for the mixture method.
    pub points: Vec<[f64; 2]>,
    /// Transported log-density per sample (DEE only).
    pub ln_n: Option<Vec<f64>>,
    pub mixture: Option<GaussianMixture>,
    pub joint: JointDensityGrid,
    pub marginals: [MarginalDensity; 2],
    pub moments: MomentSummary,
    /// Samples at or above the re-entry eccentricity.
    pub reentered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureReport {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub method: Method,
    pub scenario: String,
    pub snapshots: Vec<SnapshotResult>,
    pub times: PhaseTimes,
    pub failures: Vec<FailureReport>,
    /// Trajectories that touched the unit-disk guard.
    pub clamped: usize,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn moments(&self) -> Vec<MomentSummary> {
        self.snapshots.iter().map(|s| s.moments).collect()
    }

    pub fn grids(&self) -> Vec<BinGrid> {
        self.snapshots.iter().map(|s| s.joint.grid.clone()).collect()
    }
}

/// Initial samples in (phi, e) from the scenario seed; MC and DEE share them.
pub fn initial_samples(cfg: &ScenarioConfig) -> Result<Vec<[f64; 2]>> {
    let g = cfg.initial_gaussian()?;
    let mut rng = RngStream::new(cfg.seed);
    sample_gaussian2d(&g, cfg.n_sam, &mut rng)
}

/// Log-density at each sample; with the correction the density refers to
/// Cartesian phase coordinates.
pub fn dee_initial_weights(samples: &[[f64; 2]], g: &Gaussian2D, jacobian_correction: bool) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|&s| {
            let ln = ln_pdf_gaussian2d(g, s)?;
            if !jacobian_correction {
                return Ok(ln);
            }
            if !(s[1] > 0.0) {
                return Err(Error::Singularity);
            }
            Ok(ln - s[1].ln())
        })
        .collect()
}

fn check_failures(failures: &[FailureReport], total: usize) -> Result<()> {
    if failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
            indices: failures.iter().map(|f| f.index).collect(),
        });
    }
    Ok(())
}

fn reentry_threshold(cfg: &ScenarioConfig) -> Result<f64> {
    critical_eccentricity(cfg.a, &PhysicalConstants::default())
}

fn marginals(joint: &JointDensityGrid) -> [MarginalDensity; 2] {
    [marginal(joint, 0), marginal(joint, 1)]
}

fn polar(x: [f64; 2], branch: AngleBranch) -> [f64; 2] {
    let s = to_polar(CartesianPhaseState { x1: x[0], x2: x[1] }, branch);
    [s.phi, s.e]
}

fn cartesian(p: [f64; 2]) -> [f64; 2] {
    let c = to_cartesian(PolarPhaseState { phi: p[0], e: p[1] });
    [c.x1, c.x2]
}

pub fn run_mc(cfg: &ScenarioConfig, exec: &Executor) -> Result<RunOutput> {
    cfg.validate()?;
    let params = cfg.orbit_params()?;
    let plan = cfg.snapshot_plan()?;
    let e_cri = reentry_threshold(cfg)?;
    let samples = initial_samples(cfg)?;

    let mut clock = Stopwatch::start();
    let field = PhaseField { params };
    let trajectories = exec.map(&samples, |&p| integrate(&field, cartesian(p), &plan, &cfg.integrator));
    let mut failures = Vec::new();
    let mut clamped = 0;
    let mut per_snapshot: Vec<Vec<[f64; 2]>> = vec![Vec::with_capacity(samples.len()); plan.len()];
    for (index, tr) in trajectories.into_iter().enumerate() {
        match tr {
            Ok(tr) => {
                clamped += tr.clamped_at.is_some() as usize;
                for (k, (_, y)) in tr.snapshots.iter().enumerate() {
                    per_snapshot[k].push(polar(*y, cfg.branch));
                }
            }
            Err(e) => failures.push(FailureReport { index, reason: e.to_string() }),
        }
    }
    check_failures(&failures, samples.len())?;
    let propagation = clock.lap();

    let mut snapshots = Vec::with_capacity(plan.len());
    for (k, points) in per_snapshot.into_iter().enumerate() {
        let t = plan.time(k);
        let grid = make_edges(&points, cfg.n_b[0], cfg.n_b[1])?;
        let joint = mc_joint(&points, &grid)?.with_meta(t, AXIS_LABELS);
        let moments = sample_moments(&points, None, t, Method::Mc)?;
        let reentered = points.iter().filter(|p| p[1] >= e_cri).count();
        snapshots.push(SnapshotResult {
            time: t,
            marginals: marginals(&joint),
            points,
            ln_n: None,
            mixture: None,
            joint,
            moments,
            reentered,
        });
    }
    let interpolation = clock.lap();
    Ok(RunOutput {
        method: Method::Mc,
        scenario: cfg.name.clone(),
        snapshots,
        times: PhaseTimes { propagation, interpolation },
        failures,
        clamped,
        warnings: Vec::new(),
    })
}

struct ChunkSums {
    bins: WeightAccumulator,
    moments: MomentAccumulator,
}

/// Interpolates the sample densities onto the node grid and bins them.
fn reconstruct(
    points: &[[f64; 2]],
    density: &[f64],
    n_grid: [usize; 2],
    grid: &BinGrid,
    t: f64,
    exec: &Executor,
) -> Result<(JointDensityGrid, MomentSummary)> {
    let tri = delaunay(points).map_err(|e| Error::Geometry { t, source: Box::new(e) })?;
    let (lo, hi) = bounding_box(points);
    let xs = axis_nodes(lo[0], hi[0], n_grid[0]);
    let ys = axis_nodes(lo[1], hi[1], n_grid[1]);
    let shift = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let chunks = ys.len().div_ceil(ROW_CHUNK);
    let partial = exec.map_range(chunks, |c| {
        let mut sums = ChunkSums { bins: WeightAccumulator::new(grid.len()), moments: MomentAccumulator::new(shift) };
        let mut hint = 0;
        let mut row = Vec::with_capacity(xs.len());
        for &y in &ys[c * ROW_CHUNK..((c + 1) * ROW_CHUNK).min(ys.len())] {
            interp_row(&tri, density, &xs, y, &mut hint, &mut row);
            for (&x, v) in xs.iter().zip(&row) {
                let Some(v) = *v else { continue };
                let Ok(bin) = grid.index([x, y]) else { continue };
                sums.bins.add(bin, v);
                sums.moments.add([x, y], v);
            }
        }
        sums
    });
    let mut bins = WeightAccumulator::new(grid.len());
    let mut moments = MomentAccumulator::new(shift);
    for p in &partial {
        bins.merge(&p.bins);
        moments.merge(&p.moments);
    }
    let joint = bins.into_joint(grid)?.with_meta(t, AXIS_LABELS);
    Ok((joint, moments.summary(t, Method::Dee)?))
}

/// Density evolution along characteristics with Delaunay reconstruction.
/// `grids`, when given, fixes the bins of each snapshot.
pub fn run_dee(cfg: &ScenarioConfig, grids: Option<&[BinGrid]>, exec: &Executor) -> Result<RunOutput> {
    cfg.validate()?;
    let params = cfg.orbit_params()?;
    let plan = cfg.snapshot_plan()?;
    if let Some(g) = grids {
        if g.len() != plan.len() {
            return Err(Error::InvalidParameter(format!("{} bin grids for {} snapshots", g.len(), plan.len())));
        }
    }
    let e_cri = reentry_threshold(cfg)?;
    let samples = initial_samples(cfg)?;
    let g = cfg.initial_gaussian()?;

    let mut clock = Stopwatch::start();
    let mut failures = Vec::new();
    let ln_n0: Vec<Option<f64>> = samples
        .iter()
        .enumerate()
        .map(|(index, s)| match dee_initial_weights(std::slice::from_ref(s), &g, cfg.jacobian_correction) {
            Ok(v) => Some(v[0]),
            Err(e) => {
                failures.push(FailureReport { index, reason: e.to_string() });
                None
            }
        })
        .collect();
    let chars = exec.map_range(samples.len(), |i| {
        ln_n0[i].map(|ln| {
            let c = cartesian(samples[i]);
            integrate_characteristic(CartesianPhaseState { x1: c[0], x2: c[1] }, ln, &params, &plan, &cfg.integrator)
        })
    });
    let mut clamped = 0;
    let mut points: Vec<Vec<[f64; 2]>> = vec![Vec::with_capacity(samples.len()); plan.len()];
    let mut ln_n: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); plan.len()];
    for (index, ch) in chars.into_iter().enumerate() {
        match ch {
            None => {}
            Some(Ok(ch)) => {
                clamped += ch.clamped_at.is_some() as usize;
                for (k, cp) in ch.points.iter().enumerate() {
                    points[k].push(polar([cp.state.x1, cp.state.x2], cfg.branch));
                    ln_n[k].push(cp.ln_n);
                }
            }
            Some(Err(e)) => failures.push(FailureReport { index, reason: e.to_string() }),
        }
    }
    failures.sort_by_key(|f| f.index);
    check_failures(&failures, samples.len())?;
    let propagation = clock.lap();

    let mut snapshots = Vec::with_capacity(plan.len());
    for (k, (pts, lns)) in points.into_iter().zip(ln_n).enumerate() {
        let t = plan.time(k);
        // Density per unit (phi, e) area, scaled so the largest value is 1.
        let ln_v: Vec<f64> = pts
            .iter()
            .zip(&lns)
            .map(|(p, &l)| if cfg.jacobian_correction { l + p[1].ln() } else { l })
            .collect();
        let top = ln_v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let density: Vec<f64> = ln_v.iter().map(|&l| (l - top).exp()).collect();
        let grid = match grids {
            Some(g) => g[k].clone(),
            None => make_edges(&pts, cfg.n_b[0], cfg.n_b[1])?,
        };
        let (joint, moments) = reconstruct(&pts, &density, cfg.n_grid, &grid, t, exec)?;
        let reentered = pts.iter().filter(|p| p[1] >= e_cri).count();
        snapshots.push(SnapshotResult {
            time: t,
            marginals: marginals(&joint),
            points: pts,
            ln_n: Some(lns),
            mixture: None,
            joint,
            moments,
            reentered,
        });
    }
    let interpolation = clock.lap();
    Ok(RunOutput {
        method: Method::Dee,
        scenario: cfg.name.clone(),
        snapshots,
        times: PhaseTimes { propagation, interpolation },
        failures,
        clamped,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    #[test]
    fn correction_shifts_by_log_e() {
        let g = Gaussian2D::diagonal([1.0, 0.2], [0.1, 0.02]).unwrap();
        let pts = [[1.0, 0.2], [1.05, 0.21], [0.95, 0.19]];
        let off = dee_initial_weights(&pts, &g, false).unwrap();
        let on = dee_initial_weights(&pts, &g, true).unwrap();
        for k in 0..3 {
            assert!((off[k] - on[k] - pts[k][1].ln()).abs() < 1e-14);
        }
        let peak = (1.0 / (2.0 * std::f64::consts::PI * 0.1 * 0.02)).ln();
        assert!((off[0] - peak).abs() < 1e-12);
        assert!((off[1] - off[2]).abs() < 1e-12);
    }

    #[test]
    fn zero_eccentricity_is_singular_with_correction() {
        let g = Gaussian2D::diagonal([1.0, 0.2], [0.1, 0.02]).unwrap();
        assert!(matches!(dee_initial_weights(&[[1.0, 0.0]], &g, true), Err(Error::Singularity)));
        assert!(dee_initial_weights(&[[1.0, 0.0]], &g, false).is_ok());
    }

    #[test]
    fn shared_initial_samples() {
        let mut cfg = builtin_scenario(1).unwrap();
        cfg.n_sam = 64;
        cfg.t_u = 0.5;
        let ex = Executor::sequential();
        let mc = run_mc(&cfg, &ex).unwrap();
        let mut dcfg = cfg.clone();
        dcfg.n_grid = [40, 40];
        let dee = run_dee(&dcfg, None, &ex).unwrap();
        assert_eq!(mc.snapshots[0].points, dee.snapshots[0].points);
        assert!((mc.snapshots[1].joint.total_mass() - 1.0).abs() < 1e-12);
        assert!((dee.snapshots[1].joint.total_mass() - 1.0).abs() < 1e-12);
    }
}
