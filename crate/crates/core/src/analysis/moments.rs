use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::Method;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub time: f64,
    pub method: Method,
    pub mu_phi: f64,
    pub sigma_phi: f64,
    pub mu_e: f64,
    pub sigma_e: f64,
}

impl MomentSummary {
    pub fn as_array(&self) -> [f64; 4] {
        [self.mu_phi, self.sigma_phi, self.mu_e, self.sigma_e]
    }
}

pub const MOMENT_NAMES: [&str; 4] = ["mu_phi", "sigma_phi", "mu_e", "sigma_e"];

/// Weighted mean and population standard deviation per axis.
pub fn sample_moments(points: &[[f64; 2]], weights: Option<&[f64]>, time: f64, method: Method) -> Result<MomentSummary> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 points for moments, got {}", points.len())));
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(Error::InvalidParameter(format!("{} points but {} weights", points.len(), w.len())));
        }
        if w.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be non-negative".into()));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..points.len()).map(weight).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("weights sum to zero".into()));
    }
    let mut mean = [0.0; 2];
    for (i, p) in points.iter().enumerate() {
        let w = weight(i);
        mean[0] += w * p[0];
        mean[1] += w * p[1];
    }
    mean = mean.map(|m| m / total);
    let mut var = [0.0; 2];
    for (i, p) in points.iter().enumerate() {
        let w = weight(i);
        var[0] += w * (p[0] - mean[0]) * (p[0] - mean[0]);
        var[1] += w * (p[1] - mean[1]) * (p[1] - mean[1]);
    }
    Ok(MomentSummary {
        time,
        method,
        mu_phi: mean[0],
        sigma_phi: (var[0] / total).sqrt(),
        mu_e: mean[1],
        sigma_e: (var[1] / total).sqrt(),
    })
}

/// Streaming weighted moments; partial sums merge in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentAccumulator {
    pub shift: [f64; 2],
    pub w: f64,
    pub s1: [f64; 2],
    pub s2: [f64; 2],
}

impl MomentAccumulator {
    pub fn new(shift: [f64; 2]) -> Self {
        Self { shift, ..Self::default() }
    }

    pub fn add(&mut self, p: [f64; 2], w: f64) {
        self.w += w;
        for k in 0..2 {
            let d = p[k] - self.shift[k];
            self.s1[k] += w * d;
            self.s2[k] += w * d * d;
        }
    }

    pub fn merge(&mut self, o: &MomentAccumulator) {
        self.w += o.w;
        for k in 0..2 {
            self.s1[k] += o.s1[k];
            self.s2[k] += o.s2[k];
        }
    }

    pub fn summary(&self, time: f64, method: Method) -> Result<MomentSummary> {
        if !(self.w > 0.0) {
            return Err(Error::Degenerate("weights sum to zero".into()));
        }
        let m = [self.s1[0] / self.w, self.s1[1] / self.w];
        let v = [
            (self.s2[0] / self.w - m[0] * m[0]).max(0.0),
            (self.s2[1] / self.w - m[1] * m[1]).max(0.0),
        ];
        Ok(MomentSummary {
            time,
            method,
            mu_phi: m[0] + self.shift[0],
            sigma_phi: v[0].sqrt(),
            mu_e: m[1] + self.shift[1],
            sigma_e: v[1].sqrt(),
        })
    }
}

/// Componentwise |test - ref| / |ref|; `None` where the reference is zero.
pub fn relative_errors(reference: &MomentSummary, test: &MomentSummary) -> [Option<f64>; 4] {
    let r = reference.as_array();
    let t = test.as_array();
    std::array::from_fn(|k| if r[k] == 0.0 { None } else { Some((t[k] - r[k]).abs() / r[k].abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let m = sample_moments(&[[-1.0, 2.0], [1.0, 4.0]], None, 0.0, Method::Mc).unwrap();
        assert_eq!(m.as_array(), [0.0, 1.0, 3.0, 1.0]);
    }

    #[test]
    fn constant_weights_match_unweighted() {
        let pts = [[0.1, 0.3], [0.7, 0.2], [0.4, 0.9]];
        let a = sample_moments(&pts, None, 0.0, Method::Mc).unwrap();
        let b = sample_moments(&pts, Some(&[1.0, 1.0, 1.0]), 0.0, Method::Mc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relative_error_values() {
        let r = MomentSummary { time: 0.0, method: Method::Mc, mu_phi: 2.0, sigma_phi: 0.0, mu_e: 1.0, sigma_e: 1.0 };
        let t = MomentSummary { mu_phi: 2.1, ..r };
        let e = relative_errors(&r, &t);
        assert!((e[0].unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(e[1], None);
        assert_eq!(relative_errors(&r, &r)[2], Some(0.0));
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(sample_moments(&[[0.0, 0.0], [1.0, 1.0]], Some(&[0.0, 0.0]), 0.0, Method::Dee).is_err());
    }
}
