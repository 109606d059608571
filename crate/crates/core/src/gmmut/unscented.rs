//! Scaled symmetric sigma points and the unscented moment transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::{sqrt_spd2, symmetrize, Mat2, Vec2};

/// State dimension of the phase plane.
pub const NVAR: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UTConfig {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl Default for UTConfig {
    fn default() -> Self {
        Self { alpha: 0.8, beta: 0.0, eta: 2.0 }
    }
}

impl UTConfig {
    pub fn zeta(&self, nvar: usize) -> f64 {
        let n = nvar as f64;
        self.alpha * self.alpha * (n + self.beta) - n
    }

    /// Nvar + zeta, the squared sigma-point spread factor.
    pub fn spread_sq(&self, nvar: usize) -> Result<f64> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        let s = nvar as f64 + self.zeta(nvar);
        if !(s > 0.0) {
            return Err(Error::InvalidScaling(s));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtWeights {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

pub fn ut_weights(cfg: &UTConfig, nvar: usize) -> Result<UtWeights> {
    if nvar == 0 {
        return Err(Error::InvalidParameter("state dimension must be positive".into()));
    }
    let s = cfg.spread_sq(nvar)?;
    let zeta = cfg.zeta(nvar);
    let w0 = zeta / s;
    let wk = 1.0 / (2.0 * s);
    let mut mean = vec![wk; 2 * nvar + 1];
    mean[0] = w0;
    let mut cov = mean.clone();
    cov[0] = w0 + (1.0 - cfg.alpha * cfg.alpha + cfg.eta);
    Ok(UtWeights { mean, cov })
}

/// The 2*NVAR + 1 sigma points: the mean, then +columns, then -columns.
pub fn sigma_points(m: Vec2, p: &Mat2, cfg: &UTConfig) -> Result<Vec<Vec2>> {
    let s = cfg.spread_sq(NVAR)?.sqrt();
    let l = sqrt_spd2(p)?;
    let mut pts = vec![m];
    for sign in [1.0, -1.0] {
        for i in 0..NVAR {
            pts.push([m[0] + sign * s * l[0][i], m[1] + sign * s * l[1][i]]);
        }
    }
    Ok(pts)
}

pub fn ut_transform(points: &[Vec2], cfg: &UTConfig) -> Result<(Vec2, Mat2)> {
    if points.len() != 2 * NVAR + 1 {
        return Err(Error::InvalidParameter(format!("expected {} sigma points, got {}", 2 * NVAR + 1, points.len())));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Propagation("non-finite sigma point".into()));
    }
    let w = ut_weights(cfg, NVAR)?;
    let mut mean = [0.0; 2];
    for (p, &wm) in points.iter().zip(&w.mean) {
        mean[0] += wm * p[0];
        mean[1] += wm * p[1];
    }
    let mut cov = [[0.0; 2]; 2];
    for (p, &wp) in points.iter().zip(&w.cov) {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += wp * d[i] * d[j];
            }
        }
    }
    Ok((mean, symmetrize(&cov)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameter_weights() {
        let w = ut_weights(&UTConfig::default(), 2).unwrap();
        assert!((w.mean[0] + 0.5625).abs() < 1e-12);
        assert!(w.mean[1..].iter().all(|&v| (v - 0.390625).abs() < 1e-12));
        assert!((w.cov[0] - 1.7975).abs() < 1e-12);
        assert!((w.mean.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_alpha_zero_zeta() {
        let cfg = UTConfig { alpha: 1.0, beta: 0.0, eta: 5.0 };
        let w = ut_weights(&cfg, 2).unwrap();
        assert_eq!(w.mean, vec![0.0, 0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn invalid_scaling() {
        let cfg = UTConfig { alpha: 0.5, beta: -2.0, eta: 2.0 };
        assert!(matches!(ut_weights(&cfg, 2), Err(Error::InvalidScaling(_))));
    }

    #[test]
    fn offsets_along_axes() {
        let p = [[0.04, 0.0], [0.0, 0.0009]];
        let pts = sigma_points([1.0, 0.2], &p, &UTConfig::default()).unwrap();
        let s = 1.28f64.sqrt();
        assert!((pts[1][0] - (1.0 + s * 0.2)).abs() < 1e-15);
        assert!((pts[2][1] - (0.2 + s * 0.03)).abs() < 1e-15);
        assert!((pts[3][0] - (1.0 - s * 0.2)).abs() < 1e-15);
        let mx = (1..5).map(|i| pts[i][0]).sum::<f64>() / 4.0;
        assert!((mx - 1.0).abs() < 1e-15);
    }
}
