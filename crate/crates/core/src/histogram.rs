//! Uniform 2D binning and the joint/marginal density estimators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MC", alias = "mc")]
    Mc,
    #[serde(rename = "DEE", alias = "dee")]
    Dee,
    #[serde(rename = "GMM-UT", alias = "gmmut", alias = "gmm-ut")]
    GmmUt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mc => "MC",
            Method::Dee => "DEE",
            Method::GmmUt => "GMM-UT",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(Method::Mc),
            "dee" => Ok(Method::Dee),
            "gmm-ut" | "gmmut" | "gmm" => Ok(Method::GmmUt),
            _ => Err(Error::Parse(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    counts: [usize; 2],
    edges: [Vec<f64>; 2],
    widths: [f64; 2],
}

impl BinGrid {
    /// Uniform bins over `[lo[i], hi[i]]` with `counts[i]` bins per axis.
    pub fn uniform(lo: [f64; 2], hi: [f64; 2], counts: [usize; 2]) -> Result<Self> {
        let mut edges: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut widths = [0.0; 2];
        for k in 0..2 {
            let nb = counts[k];
            if nb == 0 {
                return Err(Error::InvalidParameter(format!("axis {} needs at least one bin", k + 1)));
            }
            if !(hi[k] > lo[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(Error::Degenerate(format!(
                    "zero or invalid range on axis {}: [{}, {}]",
                    k + 1,
                    lo[k],
                    hi[k]
                )));
            }
            let wid = (hi[k] - lo[k]) / nb as f64;
            let mut e: Vec<f64> = (0..nb).map(|ct| lo[k] + wid * ct as f64).collect();
            e.push(hi[k]);
            if e.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Degenerate(format!("bins on axis {} are too narrow", k + 1)));
            }
            edges[k] = e;
            widths[k] = wid;
        }
        Ok(Self { counts, edges, widths })
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn edges(&self, axis: usize) -> &[f64] {
        &self.edges[axis]
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.widths[axis]
    }

    pub fn area(&self) -> f64 {
        self.widths[0] * self.widths[1]
    }

    pub fn lower(&self) -> [f64; 2] {
        [self.edges[0][0], self.edges[1][0]]
    }

    pub fn upper(&self) -> [f64; 2] {
        [*self.edges[0].last().unwrap(), *self.edges[1].last().unwrap()]
    }

    pub fn centers(&self, axis: usize) -> Vec<f64> {
        let e = &self.edges[axis];
        (0..self.counts[axis]).map(|i| e[0] + self.widths[axis] * (i as f64 + 0.5)).collect()
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin index along one axis; the top edge is closed.
    pub fn axis_index(&self, axis: usize, v: f64) -> Option<usize> {
        let e = &self.edges[axis];
        if !(v >= e[0] && v <= *e.last().unwrap()) {
            return None;
        }
        let q = ((v - e[0]) / self.widths[axis]).floor();
        Some((q as usize).min(self.counts[axis] - 1))
    }

    pub fn index(&self, p: [f64; 2]) -> Result<usize> {
        let i = self.axis_index(0, p[0]).ok_or(Error::OutOfRange { axis: 1, value: p[0] })?;
        let j = self.axis_index(1, p[1]).ok_or(Error::OutOfRange { axis: 2, value: p[1] })?;
        Ok(i * self.counts[1] + j)
    }

    pub fn transpose(&self) -> BinGrid {
        BinGrid {
            counts: [self.counts[1], self.counts[0]],
            edges: [self.edges[1].clone(), self.edges[0].clone()],
            widths: [self.widths[1], self.widths[0]],
        }
    }
}

/// Bins spanning the per-axis min and max of `points`.
pub fn make_edges(points: &[[f64; 2]], nb1: usize, nb2: usize) -> Result<BinGrid> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    BinGrid::uniform(lo, hi, [nb1, nb2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityGrid {
    pub grid: BinGrid,
    /// Row-major: `values[p * nb2 + k]` for bin p on axis 1 and k on axis 2.
    pub values: Vec<f64>,
    pub method: Method,
    pub time: f64,
    pub labels: [String; 2],
}

impl JointDensityGrid {
    pub fn get(&self, p: usize, k: usize) -> f64 {
        self.values[p * self.grid.counts()[1] + k]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.area()
    }

    pub fn with_meta(mut self, time: f64, labels: [&str; 2]) -> Self {
        self.time = time;
        self.labels = labels.map(String::from);
        self
    }

    /// Index of the bin with the largest density.
    pub fn argmax(&self) -> (usize, usize) {
        let nb2 = self.grid.counts()[1];
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        (k / nb2, k % nb2)
    }
}

fn default_labels() -> [String; 2] {
    ["phi".to_string(), "e".to_string()]
}

/// Sample-count density: `c / (N * A)` per bin.
pub fn mc_joint(points: &[[f64; 2]], grid: &BinGrid) -> Result<JointDensityGrid> {
    if points.is_empty() {
        return Err(Error::Degenerate("no samples to bin".into()));
    }
    let mut counts = vec![0u64; grid.len()];
    for p in points {
        counts[grid.index(*p)?] += 1;
    }
    let scale = 1.0 / (points.len() as f64 * grid.area());
    Ok(JointDensityGrid {
        grid: grid.clone(),
        values: counts.iter().map(|&c| c as f64 * scale).collect(),
        method: Method::Mc,
        time: 0.0,
        labels: default_labels(),
    })
}

/// Per-bin accumulators for the weight-mean estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAccumulator {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl WeightAccumulator {
    pub fn new(len: usize) -> Self {
        Self { sums: vec![0.0; len], counts: vec![0; len] }
    }

    pub fn add(&mut self, bin: usize, w: f64) {
        self.sums[bin] += w;
        self.counts[bin] += 1;
    }

    /// Adds another accumulator bin by bin.
    pub fn merge(&mut self, other: &WeightAccumulator) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Converts the accumulated means into a normalised joint density.
    pub fn into_joint(self, grid: &BinGrid) -> Result<JointDensityGrid> {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let total: f64 = means.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate(format!("density weights sum to {total}")));
        }
        let scale = 1.0 / (grid.area() * total);
        Ok(JointDensityGrid {
            grid: grid.clone(),
            values: means.iter().map(|&m| m * scale).collect(),
            method: Method::Dee,
            time: 0.0,
            labels: default_labels(),
        })
    }
}

/// Weight-mean density: `(mean weight / A) / sum of means` per bin.
pub fn dee_joint(points: &[[f64; 2]], weights: &[f64], grid: &BinGrid) -> Result<JointDensityGrid> {
    if points.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let mut acc = WeightAccumulator::new(grid.len());
    for (p, &w) in points.iter().zip(weights) {
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative or invalid weight {w}")));
        }
        acc.add(grid.index(*p)?, w);
    }
    acc.into_joint(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDensity {
    /// 0 for the first coordinate, 1 for the second.
    pub axis: usize,
    pub centers: Vec<f64>,
    pub values: Vec<f64>,
    pub width: f64,
}

impl MarginalDensity {
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width
    }
}

/// Integrates the joint density over the other axis.
pub fn marginal(joint: &JointDensityGrid, axis: usize) -> MarginalDensity {
    let [n1, n2] = joint.grid.counts();
    let area = joint.grid.area();
    let wid = joint.grid.width(axis);
    let values = if axis == 0 {
        (0..n1).map(|p| area * (0..n2).map(|k| joint.get(p, k)).sum::<f64>() / wid).collect()
    } else {
        (0..n2).map(|k| area * (0..n1).map(|p| joint.get(p, k)).sum::<f64>() / wid).collect()
    };
    MarginalDensity { axis, centers: joint.grid.centers(axis), values, width: wid }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_for_unit_interval() {
        let g = make_edges(&[[0.0, 0.0], [1.0, 1.0], [0.3, 0.7]], 4, 2).unwrap();
        assert_eq!(g.edges(0), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.axis_index(0, 1.0), Some(3));
    }

    #[test]
    fn zero_range_rejected() {
        assert!(matches!(make_edges(&[[0.0, 0.2], [1.0, 0.2]], 3, 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_bin() {
        let g = BinGrid::uniform([0.0, 0.0], [2.0, 0.5], [1, 1]).unwrap();
        let pts = [[0.1, 0.1], [1.9, 0.4], [1.0, 0.2], [0.5, 0.5]];
        let j = mc_joint(&pts, &g).unwrap();
        assert_eq!(j.values, vec![1.0]);
    }

    #[test]
    fn opposite_corners() {
        let g = BinGrid::uniform([0.0, 0.0], [1.0, 1.0], [2, 2]).unwrap();
        let j = mc_joint(&[[0.0, 0.0], [1.0, 1.0]], &g).unwrap();
        let a = g.area();
        assert_eq!(j.values, vec![0.5 / a, 0.0, 0.0, 0.5 / a]);
        let m = marginal(&j, 0);
        assert_eq!(m.values, vec![1.0, 1.0]);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outside_point_rejected() {
        let g = BinGrid::uniform([0.0, 0.0], [1.0, 1.0], [2, 2]).unwrap();
        assert!(matches!(mc_joint(&[[1.5, 0.5]], &g), Err(Error::OutOfRange { axis: 1, .. })));
    }

    #[test]
    fn dee_single_bin_and_uniform() {
        let g = BinGrid::uniform([0.0, 0.0], [1.0, 1.0], [2, 2]).unwrap();
        let j = dee_joint(&[[0.1, 0.1], [0.2, 0.2]], &[3.0, 5.0], &g).unwrap();
        assert_eq!(j.values[0], 1.0 / g.area());
        assert_eq!(&j.values[1..], &[0.0, 0.0, 0.0]);
        let j = dee_joint(&[[0.1, 0.1], [0.9, 0.9], [0.8, 0.9]], &[2.0, 2.0, 2.0], &g).unwrap();
        assert_eq!(j.values, vec![0.5 / g.area(), 0.0, 0.0, 0.5 / g.area()]);
        assert!(matches!(dee_joint(&[[0.1, 0.1]], &[0.0], &g), Err(Error::Degenerate(_))));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("gmmut".parse::<Method>().unwrap(), Method::GmmUt);
        assert_eq!("MC".parse::<Method>().unwrap(), Method::Mc);
        assert!("foo".parse::<Method>().is_err());
    }
}
