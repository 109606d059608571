use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, hamiltonian_gradient, hamiltonian_hessian, OrbitParams, PolarPhaseState};
use crate::error::{Error, Result};

pub const SCAN_NODES: usize = 400;
pub const SCAN_E_MAX: f64 = 0.95;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DEDUPE_TOL: f64 = 1e-8;
/// Points with a smaller Hessian determinant belong to a continuum and are dropped.
pub const ISOLATION_TOL: f64 = 1e-12;
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Center,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub phi: f64,
    pub e: f64,
    pub hamiltonian: f64,
    pub kind: PointKind,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct StationarySearch {
    pub points: Vec<StationaryPoint>,
    pub seeds: usize,
    pub warnings: Vec<String>,
}

fn grad_norm(phi: f64, e: f64, p: &OrbitParams) -> Result<f64> {
    let g = hamiltonian_gradient(PolarPhaseState { phi, e }, p)?;
    Ok(g[0].hypot(g[1]))
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Returns `(e, phi)` after reflecting negative eccentricity through the origin.
fn reflect(phi: f64, e: f64) -> (f64, f64) {
    if e < 0.0 {
        (wrap(phi + PI), -e)
    } else {
        (wrap(phi), e)
    }
}

/// Damped Newton on the gradient of H in (phi, e).
fn newton(seed: [f64; 2], p: &OrbitParams) -> Option<[f64; 2]> {
    let (mut phi, mut e) = reflect(seed[0], seed[1]);
    let mut g = hamiltonian_gradient(PolarPhaseState { phi, e }, p).ok()?;
    let mut norm = g[0].hypot(g[1]);
    for _ in 0..100 {
        if norm <= 1e-14 {
            break;
        }
        let h = hamiltonian_hessian(PolarPhaseState { phi, e }, p).ok()?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let d = [
            -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
            -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
        ];
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-8 {
            let (tp, te) = (phi + lambda * d[0], e + lambda * d[1]);
            let (np, ne) = reflect(tp, te);
            if ne < 0.999 {
                if let Ok(ng) = hamiltonian_gradient(PolarPhaseState { phi: np, e: ne }, p) {
                    let nn = ng[0].hypot(ng[1]);
                    if nn < norm || nn <= 1e-14 {
                        phi = np;
                        e = ne;
                        g = ng;
                        norm = nn;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm <= RESIDUAL_TOL).then_some([phi, e])
}

fn phi_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn scan_seeds(p: &OrbitParams) -> Result<Vec<[f64; 2]>> {
    let n = SCAN_NODES;
    let dphi = TAU / n as f64;
    let de = SCAN_E_MAX / (n - 1) as f64;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = grad_norm(i as f64 * dphi, j as f64 * de, p)?;
        }
    }
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = g[i * n + j];
            let mut is_min = true;
            'nb: for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = j as i64 + dj;
                    if jj < 0 || jj >= n as i64 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(n as i64) as usize;
                    if g[ii * n + jj as usize] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                seeds.push([i as f64 * dphi, j as f64 * de]);
            }
        }
    }
    // Roots of dH/de along the apsidal axes, found by sign changes.
    for phi in [0.0, PI] {
        let m = 4 * n;
        let step = SCAN_E_MAX / m as f64;
        let mut prev = hamiltonian_gradient(PolarPhaseState { phi, e: 0.0 }, p)?[1];
        for k in 1..=m {
            let e = k as f64 * step;
            let cur = hamiltonian_gradient(PolarPhaseState { phi, e }, p)?[1];
            if prev == 0.0 || prev.signum() != cur.signum() {
                seeds.push([phi, e - 0.5 * step]);
            }
            prev = cur;
        }
    }
    Ok(seeds)
}

/// Isolated stationary points of H over 0 <= e < 1.
pub fn find_stationary_points(p: &OrbitParams) -> Result<StationarySearch> {
    if !(p.c >= 0.0) || !(p.w >= 0.0) {
        return Err(Error::InvalidParameter(format!("C = {} and W = {} must be non-negative", p.c, p.w)));
    }
    let seeds = scan_seeds(p)?;
    let mut out = StationarySearch { seeds: seeds.len(), ..Default::default() };
    let mut skipped = 0usize;
    for seed in &seeds {
        let Some([phi, mut e]) = newton(*seed, p) else {
            skipped += 1;
            continue;
        };
        if e <= DEDUPE_TOL && grad_norm(phi, 0.0, p)? <= RESIDUAL_TOL {
            e = 0.0;
        }
        let s = PolarPhaseState { phi, e };
        let h = hamiltonian_hessian(s, p)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() <= ISOLATION_TOL {
            continue;
        }
        let dup = out
            .points
            .iter()
            .any(|q| (q.e - e).abs() <= DEDUPE_TOL && phi_distance(q.phi, phi) <= DEDUPE_TOL);
        if dup {
            continue;
        }
        out.points.push(StationaryPoint {
            phi,
            e,
            hamiltonian: hamiltonian(s, p)?,
            kind: if det > 0.0 { PointKind::Center } else { PointKind::Saddle },
            gradient_norm: grad_norm(phi, e, p)?,
        });
    }
    if skipped > 0 {
        out.warnings.push(format!("{skipped} of {} seeds did not converge and were skipped", seeds.len()));
    }
    out.points.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.e.total_cmp(&b.e)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subdomain {
    SubD1,
    SubD2,
    SubD3,
    Outside,
    /// Within the tie tolerance of a separatrix level.
    Boundary,
}

impl std::fmt::Display for Subdomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Subdomain::SubD1 => "SubD1",
            Subdomain::SubD2 => "SubD2",
            Subdomain::SubD3 => "SubD3",
            Subdomain::Outside => "outside",
            Subdomain::Boundary => "boundary",
        })
    }
}

/// Stationary points arranged by role for a portrait with two centers, one
/// interior saddle and the pair of origin points.
#[derive(Debug, Clone, PartialEq)]
pub struct Portrait {
    pub params: OrbitParams,
    pub points: Vec<StationaryPoint>,
    pub min_center: StationaryPoint,
    pub max_center: StationaryPoint,
    pub saddle: StationaryPoint,
    pub h_origin: f64,
}

impl Portrait {
    pub fn new(params: OrbitParams, points: Vec<StationaryPoint>) -> Result<Self> {
        let centers: Vec<_> = points.iter().filter(|q| q.kind == PointKind::Center).copied().collect();
        let saddles: Vec<_> = points.iter().filter(|q| q.kind == PointKind::Saddle && q.e > 0.0).copied().collect();
        let origin: Vec<_> = points.iter().filter(|q| q.e == 0.0).copied().collect();
        if centers.len() != 2 || saddles.len() != 1 || origin.is_empty() {
            return Err(Error::UnsupportedPortrait(format!(
                "{} centers, {} interior saddles, {} origin points",
                centers.len(),
                saddles.len(),
                origin.len()
            )));
        }
        let (min_center, max_center) = if centers[0].hamiltonian < centers[1].hamiltonian {
            (centers[0], centers[1])
        } else {
            (centers[1], centers[0])
        };
        let h_origin = origin[0].hamiltonian;
        let saddle = saddles[0];
        if !(min_center.hamiltonian < h_origin && h_origin < saddle.hamiltonian && saddle.hamiltonian < max_center.hamiltonian) {
            return Err(Error::UnsupportedPortrait("separatrix levels are not ordered min < origin < saddle < max".into()));
        }
        Ok(Self { params, points, min_center, max_center, saddle, h_origin })
    }

    pub fn compute(params: &OrbitParams) -> Result<Self> {
        let search = find_stationary_points(params)?;
        Self::new(*params, search.points)
    }

    /// Levels of the bounding contours, ascending.
    pub fn levels(&self) -> [f64; 4] {
        [self.min_center.hamiltonian, self.h_origin, self.saddle.hamiltonian, self.max_center.hamiltonian]
    }

    pub fn classify(&self, s: PolarPhaseState) -> Result<Subdomain> {
        classify_subdomain(s, self)
    }
}

fn cart(phi: f64, e: f64) -> [f64; 2] {
    [e * phi.sin(), e * phi.cos()]
}

/// Labels the region containing `s` by its H level; the band above the saddle
/// level counts as SubD3 only on the island around the maximum.
pub fn classify_subdomain(s: PolarPhaseState, portrait: &Portrait) -> Result<Subdomain> {
    let p = &portrait.params;
    let h = hamiltonian(s, p)?;
    let [h_min, h_origin, h_saddle, h_max] = portrait.levels();
    if [h_origin, h_saddle].iter().any(|&l| (h - l).abs() <= BOUNDARY_TOL) {
        return Ok(Subdomain::Boundary);
    }
    if h > h_min && h < h_origin {
        return Ok(Subdomain::SubD1);
    }
    if h > h_origin && h < h_saddle {
        return Ok(Subdomain::SubD2);
    }
    if h > h_saddle && h < h_max {
        let a = cart(s.phi, s.e);
        let b = cart(portrait.max_center.phi, portrait.max_center.e);
        let steps = 256;
        for k in 1..steps {
            let t = k as f64 / steps as f64;
            let x1 = a[0] + t * (b[0] - a[0]);
            let x2 = a[1] + t * (b[1] - a[1]);
            let e = x1.hypot(x2);
            let hk = hamiltonian(PolarPhaseState { phi: x1.atan2(x2), e }, p)?;
            if hk <= h_saddle {
                return Ok(Subdomain::Outside);
            }
        }
        return Ok(Subdomain::SubD3);
    }
    Ok(Subdomain::Outside)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    /// Vertices in (phi, e).
    pub points: Vec<[f64; 2]>,
}

/// Marching-squares contours of H over phi in [0, 2pi], e in [0, e_max].
pub fn hamiltonian_contours(p: &OrbitParams, levels: &[f64], n: [usize; 2], e_max: f64) -> Result<Vec<Contour>> {
    if n[0] < 2 || n[1] < 2 || !(e_max > 0.0 && e_max < 1.0) {
        return Err(Error::InvalidParameter("contour grid needs 2+ nodes per axis and 0 < e_max < 1".into()));
    }
    let [nx, ny] = n;
    let xs: Vec<f64> = (0..nx).map(|i| TAU * i as f64 / (nx - 1) as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|j| e_max * j as f64 / (ny - 1) as f64).collect();
    let mut hv = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            hv[i * ny + j] = hamiltonian(PolarPhaseState { phi: xs[i], e: ys[j] }, p)?;
        }
    }
    let at = |i: usize, j: usize| hv[i * ny + j];
    let mut out = Vec::new();
    for &level in levels {
        // Edge ids: 2*(i*ny+j) along phi, +1 along e.
        let point_on = |id: usize| -> [f64; 2] {
            let base = id / 2;
            let (i, j) = (base / ny, base % ny);
            let (i2, j2) = if id.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
            let (a, b) = (at(i, j), at(i2, j2));
            let t = if b != a { (level - a) / (b - a) } else { 0.5 };
            [xs[i] + t * (xs[i2] - xs[i]), ys[j] + t * (ys[j2] - ys[j])]
        };
        let mut segments: Vec<[usize; 2]> = Vec::new();
        for i in 0..nx - 1 {
            for j in 0..ny - 1 {
                let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
                let mut code = 0;
                for (k, &x) in v.iter().enumerate() {
                    if x > level {
                        code |= 1 << k;
                    }
                }
                let bottom = 2 * (i * ny + j);
                let right = 2 * ((i + 1) * ny + j) + 1;
                let top = 2 * (i * ny + j + 1);
                let left = 2 * (i * ny + j) + 1;
                let centre_above = v.iter().sum::<f64>() / 4.0 > level;
                match code {
                    0 | 15 => {}
                    1 | 14 => segments.push([left, bottom]),
                    2 | 13 => segments.push([bottom, right]),
                    3 | 12 => segments.push([left, right]),
                    4 | 11 => segments.push([right, top]),
                    6 | 9 => segments.push([bottom, top]),
                    7 | 8 => segments.push([left, top]),
                    5 => {
                        if centre_above {
                            segments.push([left, top]);
                            segments.push([bottom, right]);
                        } else {
                            segments.push([left, bottom]);
                            segments.push([right, top]);
                        }
                    }
                    10 => {
                        if centre_above {
                            segments.push([left, bottom]);
                            segments.push([right, top]);
                        } else {
                            segments.push([left, top]);
                            segments.push([bottom, right]);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, s) in segments.iter().enumerate() {
            by_edge.entry(s[0]).or_default().push(k);
            by_edge.entry(s[1]).or_default().push(k);
        }
        let mut used = vec![false; segments.len()];
        for start in 0..segments.len() {
            if used[start] {
                continue;
            }
            used[start] = true;
            let mut chain = vec![segments[start][0], segments[start][1]];
            for forward in [true, false] {
                loop {
                    let end = if forward { *chain.last().unwrap() } else { chain[0] };
                    let next = by_edge[&end].iter().copied().find(|&k| !used[k]);
                    let Some(k) = next else { break };
                    used[k] = true;
                    let other = if segments[k][0] == end { segments[k][1] } else { segments[k][0] };
                    if forward {
                        chain.push(other);
                    } else {
                        chain.insert(0, other);
                    }
                }
            }
            out.push(Contour { level, points: chain.into_iter().map(point_on).collect() });
        }
    }
    Ok(out)
}
