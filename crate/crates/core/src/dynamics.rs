//! Averaged SRP + J2 dynamics in the (solar angle, eccentricity) plane.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants in km, s, kg units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gravitational parameter, km^3/s^2.
    pub mu: f64,
    /// Equatorial radius, km.
    pub earth_radius: f64,
    pub j2: f64,
    /// Speed of light, km/s.
    pub c_light: f64,
    /// Solar flux at 1 AU in kg/s^3 (numerically equal to W/m^2, independent of length unit).
    pub solar_flux: f64,
    /// Mean motion of the sun, rad/s.
    pub n_sun_phys: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu: 398_600.441_8,
            earth_radius: 6_378.137,
            j2: 1.082_63e-3,
            c_light: 299_792.458,
            solar_flux: 1361.0,
            n_sun_phys: TAU / (365.25 * 86_400.0),
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("earth_radius", self.earth_radius),
            ("j2", self.j2),
            ("c_light", self.c_light),
            ("solar_flux", self.solar_flux),
            ("n_sun_phys", self.n_sun_phys),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dimensionless dynamical parameters; time is measured in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    /// Semi-major axis, km.
    pub a: f64,
    /// Radiative parameter.
    pub c: f64,
    /// Oblateness parameter.
    pub w: f64,
    /// Mean motion of the sun, rad/yr.
    pub n_sun: f64,
}

impl OrbitParams {
    pub fn new(a: f64, c: f64, w: f64) -> Result<Self> {
        let p = Self { a, c, w, n_sun: TAU };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a.is_finite()
            && self.a > 0.0
            && self.c.is_finite()
            && self.c >= 0.0
            && self.w.is_finite()
            && self.w >= 0.0
            && self.n_sun.is_finite()
            && self.n_sun > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("orbit parameters out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPhaseState {
    pub phi: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPhaseState {
    pub x1: f64,
    pub x2: f64,
}

impl CartesianPhaseState {
    pub fn radius_sq(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }
}

/// Interval into which solar angles are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AngleBranch {
    /// [0, 2pi)
    #[default]
    #[serde(rename = "zero_to_two_pi")]
    ZeroToTwoPi,
    /// [-pi, pi)
    #[serde(rename = "minus_pi_to_pi")]
    MinusPiToPi,
}

impl AngleBranch {
    pub fn lower(self) -> f64 {
        match self {
            AngleBranch::ZeroToTwoPi => 0.0,
            AngleBranch::MinusPiToPi => -PI,
        }
    }

    pub fn wrap(self, phi: f64) -> f64 {
        let lo = self.lower();
        let mut r = (phi - lo).rem_euclid(TAU);
        if r >= TAU {
            r = 0.0;
        }
        lo + r
    }

    pub fn contains(self, phi: f64) -> bool {
        let lo = self.lower();
        phi >= lo && phi < lo + TAU
    }
}

pub fn to_cartesian(s: PolarPhaseState) -> CartesianPhaseState {
    let (sin, cos) = s.phi.sin_cos();
    CartesianPhaseState { x1: s.e * sin, x2: s.e * cos }
}

pub fn to_polar(s: CartesianPhaseState, branch: AngleBranch) -> PolarPhaseState {
    PolarPhaseState {
        phi: branch.wrap(s.x1.atan2(s.x2)),
        e: s.x1.hypot(s.x2),
    }
}

/// Radiative and oblateness parameters for semi-major axis `a` (km) and
/// area-to-mass ratio `tau` (km^2/kg).
pub fn compute_cw(consts: &PhysicalConstants, a: f64, tau: f64) -> Result<(f64, f64)> {
    consts.validate()?;
    if !(a > 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a}, tau = {tau}")));
    }
    let n_s = (consts.mu / (a * a * a)).sqrt();
    let sigma = consts.solar_flux * a * a * tau / (consts.mu * consts.c_light);
    let ratio = n_s / consts.n_sun_phys;
    let c = 1.5 * sigma * ratio;
    let re_a = consts.earth_radius / a;
    let w = 1.5 * consts.j2 * re_a * re_a * ratio;
    if c.is_finite() && w.is_finite() {
        Ok((c, w))
    } else {
        Err(Error::InvalidParameter(format!("non-finite C/W for a = {a}, tau = {tau}")))
    }
}

/// Area-to-mass ratio that yields radiative parameter `c` at semi-major axis `a`.
pub fn tau_for_c(consts: &PhysicalConstants, a: f64, c: f64) -> f64 {
    let n_s = (consts.mu / (a * a * a)).sqrt();
    let sigma = c * consts.n_sun_phys / (1.5 * n_s);
    sigma * consts.mu * consts.c_light / (consts.solar_flux * a * a)
}

pub fn critical_eccentricity(a: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(a > consts.earth_radius) {
        return Err(Error::Domain(format!("semi-major axis {a} km does not exceed the Earth radius")));
    }
    Ok(1.0 - consts.earth_radius / a)
}

fn check_e(e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::Domain(format!("eccentricity {e} outside [0, 1)")));
    }
    Ok((1.0 - e * e).sqrt())
}

pub fn hamiltonian(s: PolarPhaseState, p: &OrbitParams) -> Result<f64> {
    let r = check_e(s.e)?;
    Ok(r + p.c * s.e * s.phi.cos() + p.w / 3.0 / (r * r * r))
}

/// The Hamiltonian expressed in Cartesian phase coordinates.
pub fn hamiltonian_cartesian(s: CartesianPhaseState, p: &OrbitParams) -> Result<f64> {
    let r2 = 1.0 - s.radius_sq();
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("radius^2 = {} >= 1", s.radius_sq())));
    }
    let r = r2.sqrt();
    Ok(r + p.c * s.x2 + p.w / 3.0 / (r2 * r))
}

/// Gradient of H with respect to (phi, e).
pub fn hamiltonian_gradient(s: PolarPhaseState, p: &OrbitParams) -> Result<[f64; 2]> {
    let r = check_e(s.e)?;
    let (sin, cos) = s.phi.sin_cos();
    let r5 = r * r * r * r * r;
    Ok([-p.c * s.e * sin, -s.e / r + p.c * cos + p.w * s.e / r5])
}

/// Hessian of H with respect to (phi, e).
pub fn hamiltonian_hessian(s: PolarPhaseState, p: &OrbitParams) -> Result<[[f64; 2]; 2]> {
    let r = check_e(s.e)?;
    let (sin, cos) = s.phi.sin_cos();
    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let r7 = r5 * r2;
    let h_pp = -p.c * s.e * cos;
    let h_pe = -p.c * sin;
    let h_ee = -1.0 / r3 + p.w * (1.0 / r5 + 5.0 * s.e * s.e / r7);
    Ok([[h_pp, h_pe], [h_pe, h_ee]])
}

/// Returns (de/dt, dphi/dt).
pub fn eom_polar(s: PolarPhaseState, p: &OrbitParams) -> Result<(f64, f64)> {
    if s.e == 0.0 {
        return Err(Error::Singularity);
    }
    let r = check_e(s.e)?;
    let (sin, cos) = s.phi.sin_cos();
    let r4 = r * r * r * r;
    let de = p.n_sun * p.c * r * sin;
    let dphi = p.n_sun * (p.c * r / s.e * cos + p.w / r4 - 1.0);
    Ok((de, dphi))
}

/// Returns (dx1/dt, dx2/dt); smooth through the origin.
pub fn eom_cartesian(s: CartesianPhaseState, p: &OrbitParams) -> Result<[f64; 2]> {
    let r2 = 1.0 - s.radius_sq();
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("radius^2 = {} >= 1", s.radius_sq())));
    }
    let r = r2.sqrt();
    let k = p.w / (r2 * r2) - 1.0;
    Ok([p.n_sun * (p.c * r + s.x2 * k), -p.n_sun * s.x1 * k])
}

/// d(ln n)/dt for the Cartesian phase-space density; independent of W.
pub fn density_log_rate(s: CartesianPhaseState, p: &OrbitParams) -> Result<f64> {
    let r2 = 1.0 - s.radius_sq();
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("radius^2 = {} >= 1", s.radius_sq())));
    }
    Ok(p.n_sun * s.x1 * p.c / r2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> OrbitParams {
        OrbitParams::new(2.5 * 6378.137, 0.15, 0.409).unwrap()
    }

    #[test]
    fn w_at_two_and_a_half_radii() {
        let k = PhysicalConstants::default();
        let (c, w) = compute_cw(&k, 2.5 * k.earth_radius, 0.0).unwrap();
        assert_eq!(c, 0.0);
        assert!((w - 0.409).abs() / 0.409 <= 5e-3, "W = {w}");
    }

    #[test]
    fn c_round_trip() {
        let k = PhysicalConstants::default();
        let a = 2.5 * k.earth_radius;
        let tau = tau_for_c(&k, a, 0.15);
        let (c, _) = compute_cw(&k, a, tau).unwrap();
        assert!((c - 0.15).abs() <= 1e-12);
    }

    #[test]
    fn critical_eccentricity_values() {
        let k = PhysicalConstants::default();
        assert_eq!(critical_eccentricity(2.5 * k.earth_radius, &k).unwrap(), 0.6);
        assert_eq!(critical_eccentricity(2.0 * k.earth_radius, &k).unwrap(), 0.5);
        assert!(critical_eccentricity(k.earth_radius, &k).is_err());
    }

    #[test]
    fn hamiltonian_hand_values() {
        let p = params();
        let h0 = hamiltonian(PolarPhaseState { phi: 1.3, e: 0.0 }, &p).unwrap();
        assert!((h0 - (1.0 + 0.409 / 3.0)).abs() < 1e-15);
        let h = hamiltonian(PolarPhaseState { phi: PI / 2.0, e: 0.6 }, &p).unwrap();
        let expect = 0.8 + 0.15 * 0.6 * (PI / 2.0).cos() + 0.409 / 3.0 / 0.512;
        assert!((h - expect).abs() < 1e-15);
        assert!(hamiltonian(PolarPhaseState { phi: 0.0, e: 1.0 }, &p).is_err());
    }

    #[test]
    fn polar_rates_hand_values() {
        let p = params();
        let (de, _) = eom_polar(PolarPhaseState { phi: 0.0, e: 0.3 }, &p).unwrap();
        assert_eq!(de, 0.0);
        let (de, dphi) = eom_polar(PolarPhaseState { phi: PI / 2.0, e: 0.6 }, &p).unwrap();
        assert!((de - 0.12 * TAU).abs() < 1e-14);
        let expect = TAU * (0.15 * 0.8 / 0.6 * (PI / 2.0).cos() + 0.409 / 0.4096 - 1.0);
        assert!((dphi - expect).abs() < 1e-14);
        assert!(matches!(
            eom_polar(PolarPhaseState { phi: 0.0, e: 0.0 }, &p),
            Err(Error::Singularity)
        ));
    }

    #[test]
    fn cartesian_matches_chain_rule() {
        let p = params();
        let s = PolarPhaseState { phi: 1.0, e: 0.3 };
        let (de, dphi) = eom_polar(s, &p).unwrap();
        let v = eom_cartesian(to_cartesian(s), &p).unwrap();
        let (sin, cos) = s.phi.sin_cos();
        let dx1 = de * sin + s.e * cos * dphi;
        let dx2 = de * cos - s.e * sin * dphi;
        assert!((v[0] - dx1).abs() <= 1e-12 * dx1.abs().max(1.0));
        assert!((v[1] - dx2).abs() <= 1e-12 * dx2.abs().max(1.0));
    }

    #[test]
    fn cartesian_field_finite_at_origin() {
        let p = params();
        let v0 = eom_cartesian(CartesianPhaseState { x1: 0.0, x2: 0.0 }, &p).unwrap();
        assert!((v0[0] - TAU * 0.15).abs() < 1e-15 && v0[1] == 0.0);
        for k in 0..8 {
            let th = k as f64 * 0.7;
            let r = 1e-9;
            let v = eom_cartesian(CartesianPhaseState { x1: r * th.sin(), x2: r * th.cos() }, &p).unwrap();
            assert!((v[0] - v0[0]).abs() < 1e-7 && (v[1] - v0[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn log_rate_hand_values() {
        let p = params();
        assert_eq!(density_log_rate(CartesianPhaseState { x1: 0.0, x2: 0.4 }, &p).unwrap(), 0.0);
        let r = density_log_rate(CartesianPhaseState { x1: 0.6, x2: 0.0 }, &p).unwrap();
        assert!((r - 0.1125 * TAU).abs() < 1e-14);
        assert!(density_log_rate(CartesianPhaseState { x1: 0.8, x2: 0.6 }, &p).is_err());
    }

    #[test]
    fn conversions() {
        let c = to_cartesian(PolarPhaseState { phi: PI / 2.0, e: 0.5 });
        assert_eq!(c.x1, 0.5);
        assert!(c.x2.abs() < 1e-16);
        let s = to_polar(CartesianPhaseState { x1: 0.0, x2: -0.3 }, AngleBranch::ZeroToTwoPi);
        assert_eq!(s.phi, PI);
        assert_eq!(s.e, 0.3);
        let s = to_polar(CartesianPhaseState { x1: 0.0, x2: -0.3 }, AngleBranch::MinusPiToPi);
        assert_eq!(s.phi, -PI);
    }

    #[test]
    fn branch_wrap_stays_in_range() {
        for b in [AngleBranch::ZeroToTwoPi, AngleBranch::MinusPiToPi] {
            for phi in [-1e-18, -PI, PI, TAU, -TAU, 7.0, -7.0, 100.0] {
                assert!(b.contains(b.wrap(phi)), "{b:?} {phi} -> {}", b.wrap(phi));
            }
        }
    }
}
