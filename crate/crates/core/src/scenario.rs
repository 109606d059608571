//! Scenario configuration, built-in scenarios and case presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{AngleBranch, OrbitParams, PhysicalConstants};
use crate::error::{Error, Result};
use crate::gmmut::UTConfig;
use crate::histogram::Method;
use crate::odeint::{IntegratorConfig, SnapshotPlan};
use crate::stochastics::Gaussian2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Initial mean solar angle, rad.
    pub phi0: f64,
    pub e0: f64,
    /// Initial spread in solar angle; the standard deviation is half of it.
    pub delta_phi: f64,
    pub delta_e: f64,
    /// Simulation time, yr.
    pub t_u: f64,
    /// Snapshot interval, yr.
    pub dt: f64,
    pub c: f64,
    pub w: f64,
    /// Semi-major axis, km.
    pub a: f64,
    #[serde(default)]
    pub branch: AngleBranch,
    pub n_sam: usize,
    pub n_1d: usize,
    /// Interpolation nodes per axis.
    pub n_grid: [usize; 2],
    /// Histogram bins per axis.
    pub n_b: [usize; 2],
    pub seed: u64,
    #[serde(default = "default_true")]
    pub jacobian_correction: bool,
    pub method: Method,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub ut: UTConfig,
}

fn default_true() -> bool {
    true
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Lists every violated invariant.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let finite = [
            ("phi0", self.phi0),
            ("e0", self.e0),
            ("delta_phi", self.delta_phi),
            ("delta_e", self.delta_e),
            ("t_u", self.t_u),
            ("dt", self.dt),
            ("c", self.c),
            ("w", self.w),
            ("a", self.a),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                bad.push(format!("{name} must be finite"));
            }
        }
        if !(self.e0 > 0.0 && self.e0 < 1.0) {
            bad.push(format!("e0 = {} must lie in (0, 1)", self.e0));
        }
        if !(self.delta_phi > 0.0) || !(self.delta_e > 0.0) {
            bad.push("delta_phi and delta_e must be positive".into());
        }
        if !(self.t_u > 0.0) || !(self.dt > 0.0) {
            bad.push("t_u and dt must be positive".into());
        } else if SnapshotPlan::new(0.0, self.t_u, self.dt).is_err() {
            bad.push(format!("dt = {} must divide t_u = {}", self.dt, self.t_u));
        }
        if !(self.c >= 0.0) || !(self.w >= 0.0) {
            bad.push("c and w must be non-negative".into());
        }
        if !(self.a > 0.0) {
            bad.push("a must be positive".into());
        }
        if self.n_sam == 0 {
            bad.push("n_sam must be positive".into());
        }
        if self.n_1d.is_multiple_of(2) || self.n_1d > crate::gmmut::MAX_COMPONENTS {
            bad.push(format!("n_1d = {} must be odd and at most {}", self.n_1d, crate::gmmut::MAX_COMPONENTS));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            bad.push("n_grid needs at least 2 nodes per axis".into());
        }
        if self.n_b.contains(&0) {
            bad.push("n_b needs at least 1 bin per axis".into());
        }
        if let Err(Error::Validation(v)) = self.integrator.validate() {
            bad.extend(v.into_iter().map(|m| format!("integrator: {m}")));
        }
        if let Err(e) = self.ut.spread_sq(crate::gmmut::NVAR) {
            bad.push(format!("ut: {e}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn orbit_params(&self) -> Result<OrbitParams> {
        OrbitParams::new(self.a, self.c, self.w)
    }

    pub fn snapshot_plan(&self) -> Result<SnapshotPlan> {
        SnapshotPlan::new(0.0, self.t_u, self.dt)
    }

    /// Initial Gaussian with standard deviations delta/2 and no correlation.
    pub fn initial_gaussian(&self) -> Result<Gaussian2D> {
        Gaussian2D::diagonal([self.phi0, self.e0], [self.delta_phi / 2.0, self.delta_e / 2.0])
    }
}

/// Problem size presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

/// The four propagation cases compared for every scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Mc,
    DeeSmall,
    DeeLarge,
    GmmUt,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Mc, Case::DeeSmall, Case::DeeLarge, Case::GmmUt];

    pub fn label(self) -> &'static str {
        match self {
            Case::Mc => "MC",
            Case::DeeSmall => "DEE-961",
            Case::DeeLarge => "DEE-1E5",
            Case::GmmUt => "GMM-UT",
        }
    }

    pub fn method(self) -> Method {
        match self {
            Case::Mc => Method::Mc,
            Case::DeeSmall | Case::DeeLarge => Method::Dee,
            Case::GmmUt => Method::GmmUt,
        }
    }

    /// Applies this case's sample, grid and bin sizes to `base`.
    pub fn configure(self, base: &ScenarioConfig, scale: Scale) -> ScenarioConfig {
        let mut cfg = base.clone();
        cfg.method = self.method();
        let (n_sam, n_grid, n_b) = match (self, scale) {
            (Case::Mc, Scale::Desk) => (10_000, 500, 30),
            (Case::Mc, Scale::Full) => (100_000, 500, 50),
            (Case::DeeSmall, Scale::Desk) => (961, 500, 20),
            (Case::DeeSmall, Scale::Full) => (961, 1_000, 20),
            (Case::DeeLarge, Scale::Desk) => (10_000, 500, 30),
            (Case::DeeLarge, Scale::Full) => (100_000, 5_000, 50),
            (Case::GmmUt, Scale::Desk) => (10_000, 500, 30),
            (Case::GmmUt, Scale::Full) => (100_000, 500, 50),
        };
        cfg.n_sam = n_sam;
        cfg.n_grid = [n_grid; 2];
        cfg.n_b = [n_b; 2];
        cfg.n_1d = 39;
        cfg
    }
}

fn scenario(name: &str, phi0: f64, e0: f64, delta_phi: f64, delta_e: f64, t_u: f64, branch: AngleBranch) -> ScenarioConfig {
    let a = 2.5 * PhysicalConstants::default().earth_radius;
    ScenarioConfig {
        name: name.into(),
        phi0,
        e0,
        delta_phi,
        delta_e,
        t_u,
        dt: 0.5,
        c: 0.15,
        w: 0.409,
        a,
        branch,
        n_sam: 10_000,
        n_1d: 39,
        n_grid: [500, 500],
        n_b: [30, 30],
        seed: 20_240_601,
        jacobian_correction: true,
        method: Method::Mc,
        integrator: IntegratorConfig::default(),
        ut: UTConfig::default(),
    }
}

/// The three reference scenarios at desk scale with the MC method selected.
pub fn builtin_scenarios() -> [ScenarioConfig; 3] {
    [
        scenario("scenario-1", 2.2069, 0.145, PI / 8.0, 0.05, 2.0, AngleBranch::ZeroToTwoPi),
        scenario("scenario-2", 0.5419, 0.095, PI / 40.0, 0.01, 3.0, AngleBranch::ZeroToTwoPi),
        scenario("scenario-3", 0.3004, 0.23, PI / 32.0, 0.02, 2.0, AngleBranch::MinusPiToPi),
    ]
}

/// Built-in scenario by 1-based index.
pub fn builtin_scenario(index: usize) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .nth(index.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario {index}; expected 1, 2 or 3")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let s = builtin_scenarios();
        assert_eq!(s[0].phi0, 2.2069);
        assert_eq!(s[2].branch, AngleBranch::MinusPiToPi);
        assert_eq!(Case::GmmUt.configure(&s[0], Scale::Full).n_1d, 39);
        assert_eq!(Case::DeeLarge.configure(&s[0], Scale::Full).n_grid, [5000, 5000]);
        for c in &s {
            c.validate().unwrap();
        }
    }

    #[test]
    fn toml_round_trip() {
        let s = &builtin_scenarios()[1];
        let text = s.to_toml_string().unwrap();
        assert_eq!(&ScenarioConfig::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn validation_lists_all_problems() {
        let mut s = builtin_scenarios()[0].clone();
        s.e0 = 1.5;
        s.n_1d = 4;
        s.dt = 0.3;
        match s.validate() {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_scenario() {
        assert!(builtin_scenario(0).is_err());
        assert!(builtin_scenario(4).is_err());
        assert_eq!(builtin_scenario(2).unwrap().name, "scenario-2");
    }
}
