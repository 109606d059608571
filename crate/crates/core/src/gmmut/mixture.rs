//! Weighted bivariate Gaussian mixtures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::{eig_sym2, pdf_gaussian2d, symmetrize, Gaussian2D, Mat2, Vec2};

use super::library::SplitLibrary1D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec2,
    pub cov: Mat2,
}

impl GaussianComponent {
    pub fn gaussian(&self) -> Result<Gaussian2D> {
        Gaussian2D::new(self.mean, self.cov)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("mixture has no components".into()));
        }
        for c in &self.components {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidParameter(format!("component weight {} outside (0, 1]", c.weight)));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidParameter("component means must be finite".into()));
            }
            c.gaussian()?;
        }
        if (self.weight_sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {}", self.weight_sum())));
        }
        Ok(())
    }
}

/// Splits `g` along the eigenvector of its covariance most aligned with state
/// axis `axis` (0 or 1) using a univariate library.
pub fn split_gaussian(g: &Gaussian2D, lib: &SplitLibrary1D, axis: usize) -> Result<GaussianMixture> {
    if axis > 1 {
        return Err(Error::InvalidParameter(format!("split axis must be 0 or 1, got {axis}")));
    }
    Gaussian2D::new(g.mean, g.cov)?;
    let (lam, v) = eig_sym2(&g.cov);
    let j = if v[axis][0].abs() >= v[axis][1].abs() { 0 } else { 1 };
    let dir = [v[0][j], v[1][j]];
    let root = lam[j].sqrt();
    let components = lib
        .means
        .iter()
        .zip(&lib.weights)
        .map(|(&m, &w)| {
            let mut l = lam;
            l[j] *= lib.sigma * lib.sigma;
            let mut cov = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] = v[r][0] * l[0] * v[c][0] + v[r][1] * l[1] * v[c][1];
                }
            }
            GaussianComponent {
                weight: w,
                mean: [g.mean[0] + root * m * dir[0], g.mean[1] + root * m * dir[1]],
                cov: symmetrize(&cov),
            }
        })
        .collect();
    Ok(GaussianMixture { components })
}

/// Combined mean and covariance of a mixture.
pub fn merge_moments(mix: &GaussianMixture) -> Result<(Vec2, Mat2)> {
    let wm = mix.weight_sum();
    if !(wm > 0.0) {
        return Err(Error::Degenerate("mixture weights sum to zero".into()));
    }
    let mut mean = [0.0; 2];
    for c in &mix.components {
        let f = c.weight / wm;
        mean[0] += f * c.mean[0];
        mean[1] += f * c.mean[1];
    }
    let mut cov = [[0.0; 2]; 2];
    for c in &mix.components {
        let f = c.weight / wm;
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += f * (c.cov[i][j] + (c.mean[i] - mean[i]) * (c.mean[j] - mean[j]));
            }
        }
    }
    Ok((mean, symmetrize(&cov)))
}

pub fn mixture_pdf(mix: &GaussianMixture, x: Vec2) -> Result<f64> {
    let mut total = 0.0;
    for c in &mix.components {
        total += c.weight * pdf_gaussian2d(&c.gaussian()?, x)?;
    }
    Ok(total)
}

/// Marginal density along state axis `axis` (0 or 1).
pub fn mixture_marginal(mix: &GaussianMixture, axis: usize, x: f64) -> f64 {
    mix.components
        .iter()
        .map(|c| {
            let var = c.cov[axis][axis];
            let d = x - c.mean[axis];
            c.weight * (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_split_of_unit_gaussian() {
        let lib = SplitLibrary1D { sigma: 0.5, means: vec![-1.0, 0.0, 1.0], weights: vec![0.25, 0.5, 0.25] };
        let g = Gaussian2D::new([1.0, 2.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let mix = split_gaussian(&g, &lib, 0).unwrap();
        assert_eq!(mix.components[0].mean, [0.0, 2.0]);
        assert_eq!(mix.components[2].cov, [[0.25, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn single_component_library_is_identity() {
        let g = Gaussian2D::new([0.3, 0.1], [[0.02, 0.001], [0.001, 0.0004]]).unwrap();
        let mix = split_gaussian(&g, &SplitLibrary1D::identity(), 0).unwrap();
        assert_eq!(mix.components.len(), 1);
        let c = mix.components[0];
        assert_eq!(c.mean, g.mean);
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.cov[i][j] - g.cov[i][j]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn symmetric_pair_merge() {
        let p = [[0.1, 0.02], [0.02, 0.3]];
        let mix = GaussianMixture {
            components: vec![
                GaussianComponent { weight: 0.5, mean: [0.2, -0.1], cov: p },
                GaussianComponent { weight: 0.5, mean: [-0.2, 0.1], cov: p },
            ],
        };
        let (m, c) = merge_moments(&mix).unwrap();
        assert_eq!(m, [0.0, 0.0]);
        assert!((c[0][0] - 0.14).abs() < 1e-15 && (c[0][1] - 0.0).abs() < 1e-15);
        assert!((c[1][1] - 0.31).abs() < 1e-15);
    }

    #[test]
    fn pdf_at_center() {
        let mix = GaussianMixture {
            components: vec![GaussianComponent { weight: 1.0, mean: [0.0, 0.0], cov: [[1.0, 0.0], [0.0, 1.0]] }],
        };
        assert!((mixture_pdf(&mix, [0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-16);
    }
}
