use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use super::library::{build_split_library, SplitLibrary1D};
use super::mixture::{merge_moments, mixture_marginal, mixture_pdf, split_gaussian, GaussianComponent, GaussianMixture};
use super::unscented::{sigma_points, ut_transform, UTConfig, NVAR};
use crate::analysis::{MomentSummary, PhaseTimes, Stopwatch};
use crate::dynamics::{to_cartesian, to_polar, CartesianPhaseState, PolarPhaseState};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::histogram::{BinGrid, JointDensityGrid, MarginalDensity, Method};
use crate::odeint::{integrate, PhaseField};
use crate::propagators::{RunOutput, SnapshotResult, AXIS_LABELS};
use crate::scenario::ScenarioConfig;
use crate::stochastics::{eig_sym2, Mat2, Vec2};

pub const SIGMA_POINTS_PER_COMPONENT: usize = 2 * NVAR + 1;
/// Half-width, in component standard deviations, of the coverage box.
pub const COVERAGE_SIGMAS: f64 = 6.0;
const WINDOW_SIGMAS: f64 = 8.0;
const MAX_COVERAGE_BINS: usize = 4000;

/// Split library for `n` components, built once per process.
pub fn cached_split_library(n: usize) -> Result<Arc<SplitLibrary1D>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SplitLibrary1D>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(l) = cache.lock().unwrap().get(&n) {
        return Ok(l.clone());
    }
    let lib = Arc::new(build_split_library(n)?);
    cache.lock().unwrap().insert(n, lib.clone());
    Ok(lib)
}

/// Propagates every component's sigma points with `flow`, which returns the
/// state at each snapshot, and recombines them by the unscented transform.
/// With `period` set, the first coordinate of each point is shifted by whole
/// periods to lie nearest the component's center point.
pub fn propagate_mixture<F>(
    mix: &GaussianMixture,
    ut: &UTConfig,
    period: Option<f64>,
    exec: &Executor,
    flow: F,
) -> Result<Vec<GaussianMixture>>
where
    F: Fn(Vec2) -> Result<Vec<Vec2>> + Sync + Send,
{
    let points: Vec<Vec2> = mix
        .components
        .iter()
        .map(|c| sigma_points(c.mean, &c.cov, ut))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let paths = exec.map(&points, |&p| flow(p)).into_iter().collect::<Result<Vec<_>>>()?;
    let snaps = paths.first().map_or(0, Vec::len);
    if paths.iter().any(|p| p.len() != snaps) {
        return Err(Error::Propagation("sigma-point paths have different lengths".into()));
    }
    let mut out = Vec::with_capacity(snaps);
    for k in 0..snaps {
        let mut components = Vec::with_capacity(mix.components.len());
        for (c, comp) in mix.components.iter().enumerate() {
            let base = c * SIGMA_POINTS_PER_COMPONENT;
            let center = paths[base][k];
            let pts: Vec<Vec2> = (0..SIGMA_POINTS_PER_COMPONENT)
                .map(|i| {
                    let mut p = paths[base + i][k];
                    if let Some(per) = period {
                        p[0] -= per * ((p[0] - center[0]) / per).round();
                    }
                    p
                })
                .collect();
            let (mean, cov) = ut_transform(&pts, ut)?;
            components.push(GaussianComponent { weight: comp.weight, mean, cov });
        }
        out.push(GaussianMixture { components });
    }
    Ok(out)
}

fn var_sd(cov: &Mat2, axis: usize) -> f64 {
    cov[axis][axis].max(0.0).sqrt()
}

/// Merged moments of the mixture reported as a moment summary.
pub fn mixture_moments(mix: &GaussianMixture, time: f64) -> Result<MomentSummary> {
    let (m, p) = merge_moments(mix)?;
    Ok(MomentSummary {
        time,
        method: Method::GmmUt,
        mu_phi: m[0],
        sigma_phi: var_sd(&p, 0),
        mu_e: m[1],
        sigma_e: var_sd(&p, 1),
    })
}

/// Per-axis bounds of the union of component boxes `mean +- k sd`.
pub fn coverage_box(mix: &GaussianMixture, k: f64) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in &mix.components {
        for a in 0..2 {
            let s = var_sd(&c.cov, a);
            lo[a] = lo[a].min(c.mean[a] - k * s);
            hi[a] = hi[a].max(c.mean[a] + k * s);
        }
    }
    (lo, hi)
}

/// Midpoint-rule mass of the mixture over its `+-6 sd` coverage box. Each
/// component is evaluated only within its own `+-8 sd` window.
pub fn mixture_box_mass(mix: &GaussianMixture) -> Result<f64> {
    let (lo, hi) = coverage_box(mix, COVERAGE_SIGMAS);
    let minor = mix
        .components
        .iter()
        .map(|c| eig_sym2(&c.cov).0[1].max(0.0).sqrt())
        .fold(f64::INFINITY, f64::min);
    if !(minor > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let bins: [usize; 2] = std::array::from_fn(|a| (((hi[a] - lo[a]) / minor).ceil() as usize).clamp(1, MAX_COVERAGE_BINS));
    let h = [(hi[0] - lo[0]) / bins[0] as f64, (hi[1] - lo[1]) / bins[1] as f64];
    let mut mass = 0.0;
    for c in &mix.components {
        let g = c.gaussian()?;
        let range = |a: usize| {
            let s = var_sd(&c.cov, a);
            let i0 = ((c.mean[a] - WINDOW_SIGMAS * s - lo[a]) / h[a]).floor().max(0.0) as usize;
            let i1 = (((c.mean[a] + WINDOW_SIGMAS * s - lo[a]) / h[a]).ceil().max(0.0) as usize).min(bins[a]);
            i0..i1
        };
        let mut part = 0.0;
        for i in range(0) {
            let x = lo[0] + (i as f64 + 0.5) * h[0];
            for j in range(1) {
                let y = lo[1] + (j as f64 + 0.5) * h[1];
                part += crate::stochastics::pdf_gaussian2d(&g, [x, y])?;
            }
        }
        mass += c.weight * part;
    }
    Ok(mass * h[0] * h[1])
}

/// Joint and marginal densities at bin centers, summing the images of the
/// angle shifted by one period either way.
fn density_on_grid(mix: &GaussianMixture, grid: &BinGrid, time: f64) -> Result<(JointDensityGrid, [MarginalDensity; 2])> {
    let c0 = grid.centers(0);
    let c1 = grid.centers(1);
    let mut values = Vec::with_capacity(c0.len() * c1.len());
    for &x in &c0 {
        for &y in &c1 {
            let mut v = 0.0;
            for k in [-1.0, 0.0, 1.0] {
                v += mixture_pdf(mix, [x + k * TAU, y])?;
            }
            values.push(v);
        }
    }
    let joint = JointDensityGrid { grid: grid.clone(), values, method: Method::GmmUt, time, labels: AXIS_LABELS.map(String::from) };
    let m0 = MarginalDensity {
        axis: 0,
        values: c0.iter().map(|&x| [-1.0, 0.0, 1.0].iter().map(|k| mixture_marginal(mix, 0, x + k * TAU)).sum()).collect(),
        centers: c0,
        width: grid.width(0),
    };
    let m1 = MarginalDensity {
        axis: 1,
        values: c1.iter().map(|&y| mixture_marginal(mix, 1, y)).collect(),
        centers: c1,
        width: grid.width(1),
    };
    Ok((joint, [m0, m1]))
}

fn own_grid(mix: &GaussianMixture, n_b: [usize; 2]) -> Result<BinGrid> {
    let (m, p) = merge_moments(mix)?;
    let s = [var_sd(&p, 0), var_sd(&p, 1)];
    let lo = [m[0] - 4.0 * s[0], (m[1] - 4.0 * s[1]).max(0.0)];
    let hi = [m[0] + 4.0 * s[0], (m[1] + 4.0 * s[1]).min(1.0)];
    BinGrid::uniform(lo, hi, n_b)
}

/// Splits the initial Gaussian along the angle, propagates sigma points and
/// evaluates the mixture density per snapshot. `grids` sets the evaluation
/// bins per snapshot; otherwise a +-4 sd box of the merged moments is used.
pub fn run_gmmut(
    cfg: &ScenarioConfig,
    lib: &SplitLibrary1D,
    grids: Option<&[BinGrid]>,
    exec: &Executor,
) -> Result<RunOutput> {
    cfg.validate()?;
    lib.check()?;
    let params = cfg.orbit_params()?;
    let plan = cfg.snapshot_plan()?;
    if let Some(g) = grids {
        if g.len() != plan.len() {
            return Err(Error::InvalidParameter(format!("{} bin grids for {} snapshots", g.len(), plan.len())));
        }
    }
    let mut clock = Stopwatch::start();
    let split = split_gaussian(&cfg.initial_gaussian()?, lib, 0)?;
    let field = PhaseField { params };
    let clamped = std::sync::atomic::AtomicUsize::new(0);
    let mixtures = propagate_mixture(&split, &cfg.ut, Some(TAU), exec, |p| {
        let c = to_cartesian(PolarPhaseState { phi: p[0], e: p[1] });
        let tr = integrate(&field, [c.x1, c.x2], &plan, &cfg.integrator)?;
        if tr.clamped_at.is_some() {
            clamped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(tr
            .snapshots
            .iter()
            .map(|(_, y)| {
                let s = to_polar(CartesianPhaseState { x1: y[0], x2: y[1] }, cfg.branch);
                [s.phi, s.e]
            })
            .collect())
    })?;
    let moments = mixtures
        .iter()
        .enumerate()
        .map(|(k, m)| mixture_moments(m, plan.time(k)))
        .collect::<Result<Vec<_>>>()?;
    let propagation = clock.lap();

    let mut snapshots = Vec::with_capacity(plan.len());
    for (k, (mix, mom)) in mixtures.into_iter().zip(moments).enumerate() {
        let t = plan.time(k);
        let grid = match grids {
            Some(g) => g[k].clone(),
            None => own_grid(&mix, cfg.n_b)?,
        };
        let (joint, marginals) = density_on_grid(&mix, &grid, t)?;
        snapshots.push(SnapshotResult {
            time: t,
            points: Vec::new(),
            ln_n: None,
            mixture: Some(mix),
            joint,
            marginals,
            moments: mom,
            reentered: 0,
        });
    }
    let interpolation = clock.lap();
    let clamped = clamped.into_inner();
    let mut warnings = Vec::new();
    if clamped > 0 {
        warnings.push(format!("{clamped} sigma points reached the unit-disk guard"));
    }
    Ok(RunOutput {
        method: Method::GmmUt,
        scenario: cfg.name.clone(),
        snapshots,
        times: PhaseTimes { propagation, interpolation },
        failures: Vec::new(),
        clamped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::Gaussian2D;

    #[test]
    fn affine_flow_is_exact() {
        let lib = build_split_library(3).unwrap();
        let g = Gaussian2D::new([0.4, 0.2], [[0.02, 0.003], [0.003, 0.001]]).unwrap();
        let mix = split_gaussian(&g, &lib, 0).unwrap();
        let a = [[1.2, -0.4], [0.3, 0.9]];
        let b = [0.05, -0.02];
        let f = |x: Vec2| -> Vec2 { [a[0][0] * x[0] + a[0][1] * x[1] + b[0], a[1][0] * x[0] + a[1][1] * x[1] + b[1]] };
        let out = propagate_mixture(&mix, &UTConfig::default(), None, &Executor::sequential(), |p| Ok(vec![p, f(p)])).unwrap();
        for (c0, c1) in mix.components.iter().zip(&out[1].components) {
            let m = f(c0.mean);
            assert!((c1.mean[0] - m[0]).abs() < 1e-12 && (c1.mean[1] - m[1]).abs() < 1e-12);
            let p = &c0.cov;
            for i in 0..2 {
                for j in 0..2 {
                    let mut want = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            want += a[i][k] * p[k][l] * a[j][l];
                        }
                    }
                    assert!((c1.cov[i][j] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn period_shift_is_applied_per_component() {
        let lib = SplitLibrary1D::identity();
        let g = Gaussian2D::diagonal([0.0, 0.5], [0.1, 0.01]).unwrap();
        let mix = split_gaussian(&g, &lib, 0).unwrap();
        // Wrapping into [0, 2pi) puts the negative-side points near 2pi.
        let wrap = |p: Vec2| Ok(vec![[p[0].rem_euclid(TAU), p[1]]]);
        let out = propagate_mixture(&mix, &UTConfig::default(), Some(TAU), &Executor::sequential(), wrap).unwrap();
        let c = &out[0].components[0];
        assert!(c.mean[0].abs() < 1e-12);
        assert!((c.cov[0][0] - 0.01).abs() < 1e-12);
    }
}
