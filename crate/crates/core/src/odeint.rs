//! Adaptive Dormand-Prince 5(4) integration with exact snapshot landing.

use serde::{Deserialize, Serialize};

use crate::dynamics::{density_log_rate, eom_cartesian, CartesianPhaseState, OrbitParams};
use crate::error::{Error, Result};

/// States with radius^2 at or above this value are clamped and flagged.
pub const CLAMP_RADIUS_SQ: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, h_init: 1e-3, h_max: 0.05, max_steps: 1_000_000 }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.rel_tol > 0.0) {
            bad.push(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.abs_tol > 0.0) {
            bad.push(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if !(self.h_init > 0.0 && self.h_init <= self.h_max) {
            bad.push(format!("need 0 < h_init <= h_max, got {} and {}", self.h_init, self.h_max));
        }
        if self.max_steps == 0 {
            bad.push("max_steps must be positive".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotPlan {
    t0: f64,
    dt_snap: f64,
    count: usize,
}

impl SnapshotPlan {
    pub fn new(t0: f64, t_end: f64, dt_snap: f64) -> Result<Self> {
        if !(t_end > t0) || !(dt_snap > 0.0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "snapshot plan needs t_end > t0 and dt > 0 (t0 = {t0}, t_end = {t_end}, dt = {dt_snap})"
            )));
        }
        let q = (t_end - t0) / dt_snap;
        if (q - q.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "snapshot interval {dt_snap} does not divide the span {}",
                t_end - t0
            )));
        }
        Ok(Self { t0, dt_snap, count: q.round() as usize + 1 })
    }

    /// Plan with only the initial snapshot.
    pub fn initial_only(t0: f64) -> Self {
        Self { t0, dt_snap: 1.0, count: 1 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_snap
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.time(k)).collect()
    }
}

/// Right-hand side of an autonomous or time-dependent ODE.
pub trait VectorField<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Returns a replacement state when `y` has reached a guard region.
    fn clamp(&self, _y: &[f64; N]) -> Option<[f64; N]> {
        None
    }
}

/// Adapter turning a closure into a vector field.
pub struct FnField<F>(pub F);

impl<const N: usize, F> VectorField<N> for FnField<F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        (self.0)(t, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub snapshots: Vec<(f64, [f64; N])>,
    /// Time at which the state was clamped to the guard boundary, if ever.
    pub clamped_at: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct StepResult<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: f64,
}

fn try_step<const N: usize, F: VectorField<N>>(
    field: &F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<StepResult<N>> {
    let k2 = field.eval(t + C2 * h, &comb(y, h, &[(A21, k1)]))?;
    let k3 = field.eval(t + C3 * h, &comb(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = field.eval(t + C4 * h, &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = field.eval(
        t + C5 * h,
        &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = field.eval(
        t + h,
        &comb(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y5 = comb(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = field.eval(t + h, &y5)?;
    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
        sum += (e / sc) * (e / sc);
    }
    Ok(StepResult { y: y5, k7, err: (sum / N as f64).sqrt() })
}

/// Integrates `field` from `y0`, emitting the state at every snapshot time.
pub fn integrate<const N: usize, F: VectorField<N>>(
    field: &F,
    y0: [f64; N],
    plan: &SnapshotPlan,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>> {
    cfg.validate()?;
    let times = plan.times();
    let mut out = Trajectory {
        snapshots: Vec::with_capacity(times.len()),
        clamped_at: None,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut t = times[0];
    let mut y = y0;
    if let Some(c) = field.clamp(&y) {
        out.clamped_at = Some(t);
        out.snapshots.extend(times.iter().map(|&tk| (tk, c)));
        return Ok(out);
    }
    out.snapshots.push((t, y));
    let mut k1 = field.eval(t, &y).map_err(|e| Error::Integration { t, reason: e.to_string() })?;
    let mut h = cfg.h_init.min(cfg.h_max);
    let mut err_prev: f64 = 1e-4;

    for (idx, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if out.accepted_steps + out.rejected_steps >= cfg.max_steps {
                return Err(Error::StepBudget { t });
            }
            let remaining = target - t;
            let clipped = h >= remaining * (1.0 - 1e-12);
            let h_try = if clipped { remaining } else { h };
            let step = match try_step(field, t, &y, &k1, h_try, cfg) {
                Ok(s) if s.err.is_finite() => s,
                Ok(_) | Err(Error::Domain(_)) => {
                    out.rejected_steps += 1;
                    h = h_try * 0.25;
                    if h <= 1e-14 * t.abs().max(1.0) {
                        return Err(Error::Integration {
                            t,
                            reason: "step size underflow near the domain boundary".into(),
                        });
                    }
                    continue;
                }
                Err(e) => return Err(Error::Integration { t, reason: e.to_string() }),
            };
            if step.err <= 1.0 {
                out.accepted_steps += 1;
                t = if clipped { target } else { t + h_try };
                y = step.y;
                k1 = step.k7;
                let err = step.err.max(1e-10);
                let fac = (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
                err_prev = err.max(1e-4);
                let proposal = (h_try * fac).min(cfg.h_max);
                h = if clipped { proposal.max(h.min(cfg.h_max)) } else { proposal };
                if let Some(c) = field.clamp(&y) {
                    out.clamped_at = Some(t);
                    if t == target {
                        out.snapshots.push((target, c));
                    }
                    out.snapshots.extend(times[idx..].iter().filter(|&&tk| tk > t).map(|&tk| (tk, c)));
                    return Ok(out);
                }
            } else {
                out.rejected_steps += 1;
                let fac = (SAFETY * step.err.powf(-0.2)).max(FAC_MIN);
                h = h_try * fac;
            }
        }
        out.snapshots.push((target, y));
    }
    Ok(out)
}

/// The Cartesian phase-space field with the unit-disk guard.
#[derive(Debug, Clone, Copy)]
pub struct PhaseField {
    pub params: OrbitParams,
}

fn clamp_state(x1: f64, x2: f64) -> Option<(f64, f64)> {
    let r2 = x1 * x1 + x2 * x2;
    if r2 >= CLAMP_RADIUS_SQ {
        let s = (CLAMP_RADIUS_SQ / r2).sqrt();
        Some((x1 * s, x2 * s))
    } else {
        None
    }
}

impl VectorField<2> for PhaseField {
    fn eval(&self, _t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        eom_cartesian(CartesianPhaseState { x1: y[0], x2: y[1] }, &self.params)
    }

    fn clamp(&self, y: &[f64; 2]) -> Option<[f64; 2]> {
        clamp_state(y[0], y[1]).map(|(a, b)| [a, b])
    }
}

/// Phase-space field augmented with the log-density transport rate.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicField {
    pub params: OrbitParams,
}

impl VectorField<3> for CharacteristicField {
    fn eval(&self, _t: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        let s = CartesianPhaseState { x1: y[0], x2: y[1] };
        let v = eom_cartesian(s, &self.params)?;
        Ok([v[0], v[1], density_log_rate(s, &self.params)?])
    }

    fn clamp(&self, y: &[f64; 3]) -> Option<[f64; 3]> {
        clamp_state(y[0], y[1]).map(|(a, b)| [a, b, y[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPoint {
    pub t: f64,
    pub state: CartesianPhaseState,
    pub ln_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub points: Vec<CharacteristicPoint>,
    pub clamped_at: Option<f64>,
}

/// Integrates a phase state together with its transported log-density.
pub fn integrate_characteristic(
    s0: CartesianPhaseState,
    ln_n0: f64,
    p: &OrbitParams,
    plan: &SnapshotPlan,
    cfg: &IntegratorConfig,
) -> Result<Characteristic> {
    if !ln_n0.is_finite() {
        return Err(Error::InvalidParameter(format!("initial log-density {ln_n0} is not finite")));
    }
    let traj = integrate(&CharacteristicField { params: *p }, [s0.x1, s0.x2, ln_n0], plan, cfg)?;
    Ok(Characteristic {
        points: traj
            .snapshots
            .iter()
            .map(|&(t, y)| CharacteristicPoint {
                t,
                state: CartesianPhaseState { x1: y[0], x2: y[1] },
                ln_n: y[2],
            })
            .collect(),
        clamped_at: traj.clamped_at,
    })
}
