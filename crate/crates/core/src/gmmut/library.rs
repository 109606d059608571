//! Univariate split libraries: equally spaced, equal-width Gaussians whose
//! weighted sum approximates the standard normal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight on the sigma^2 penalty that keeps the fit away from the trivial
/// single-component solution.
pub const SIGMA_PENALTY: f64 = 1e-4;

/// Largest supported component count.
pub const MAX_COMPONENTS: usize = 39;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitLibrary1D {
    pub sigma: f64,
    /// Ascending, antisymmetric about zero.
    pub means: Vec<f64>,
    /// Symmetric, summing to one.
    pub weights: Vec<f64>,
}

fn normal_pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

/// Closed-form squared L2 distance between a shared-sigma mixture and N(0, 1).
pub fn l2_distance_sq(sigma: f64, means: &[f64], weights: &[f64]) -> f64 {
    let s2 = sigma * sigma;
    let mut cross = 0.0;
    for (&mi, &wi) in means.iter().zip(weights) {
        let row: f64 = means.iter().zip(weights).map(|(&mj, &wj)| wj * normal_pdf(mi - mj, 2.0 * s2)).sum();
        cross += wi * row;
    }
    let proj: f64 = means.iter().zip(weights).map(|(&m, &w)| w * normal_pdf(m, 1.0 + s2)).sum();
    (cross - 2.0 * proj + 0.5 / PI.sqrt()).max(0.0)
}

impl SplitLibrary1D {
    pub fn identity() -> Self {
        Self { sigma: 1.0, means: vec![0.0], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn l2_distance_sq(&self) -> f64 {
        l2_distance_sq(self.sigma, &self.means, &self.weights)
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Σω·m accumulated in mirrored pairs so symmetric libraries give exactly zero.
    pub fn first_moment(&self) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n / 2 {
            acc += self.weights[i] * self.means[i] + self.weights[n - 1 - i] * self.means[n - 1 - i];
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * self.means[n / 2];
        }
        acc
    }

    pub fn second_moment(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.means.iter().zip(&self.weights).map(|(&m, &w)| w * (s2 + m * m)).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.means.iter().zip(&self.weights).map(|(&m, &w)| w * normal_pdf(x - m, s2)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = 1.0 / (self.sigma * std::f64::consts::SQRT_2);
        self.means
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * 0.5 * (1.0 + libm::erf((x - m) * k)))
            .sum()
    }

    /// Checks the structural invariants every library must satisfy.
    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let fail = |reason: String| Err(Error::LibraryQuality { l2: self.l2_distance_sq(), reason });
        if n == 0 || n.is_multiple_of(2) || self.weights.len() != n {
            return fail(format!("need an odd number of components with matching weights, got {n}"));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return fail("means must be finite".into());
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return fail(format!("sigma {} outside (0, 1]", self.sigma));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return fail("weights must lie in (0, 1]".into());
        }
        for i in 0..n {
            let j = n - 1 - i;
            if (self.means[i] + self.means[j]).abs() > 1e-12 || (self.weights[i] - self.weights[j]).abs() > 1e-12 {
                return fail(format!("component {i} is not mirrored by component {j}"));
            }
        }
        if self.means.windows(2).any(|w| !(w[1] > w[0])) {
            return fail("means must be strictly increasing".into());
        }
        if (self.weight_sum() - 1.0).abs() > 1e-12 {
            return fail(format!("weights sum to {}", self.weight_sum()));
        }
        if self.first_moment().abs() > 1e-10 {
            return fail(format!("first moment {}", self.first_moment()));
        }
        if (self.second_moment() - 1.0).abs() > 1e-2 {
            return fail(format!("second moment {}", self.second_moment()));
        }
        Ok(())
    }
}

/// Weight fit for fixed (sigma, spacing): minimises the L2 distance subject to
/// unit mass, unit second moment, symmetry and non-negativity.
/// Returns `None` when no non-negative weights meet the moment constraints.
pub fn fit_weights(n: usize, sigma: f64, spacing: f64) -> Option<Vec<f64>> {
    if n == 1 {
        return Some(vec![1.0]);
    }
    let k = (n - 1) / 2;
    let s2 = sigma * sigma;
    let outer = k as f64 * spacing;
    if !(sigma > 0.0 && sigma < 1.0 && spacing > 0.0) || outer * outer < 1.0 - s2 {
        return None;
    }
    let means: Vec<f64> = (0..n).map(|i| (i as f64 - k as f64) * spacing).collect();
    let fold = |i: usize| (i as isize - k as isize).unsigned_abs();
    let m = k + 1;
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut lin = DVector::<f64>::zeros(m);
    for i in 0..n {
        lin[fold(i)] -= 2.0 * normal_pdf(means[i], 1.0 + s2);
        for j in 0..n {
            h[(fold(i), fold(j))] += 2.0 * normal_pdf(means[i] - means[j], 2.0 * s2);
        }
    }
    let mut a = DMatrix::<f64>::zeros(2, m);
    a[(0, 0)] = 1.0;
    a[(1, 0)] = s2;
    for c in 1..m {
        let mc = c as f64 * spacing;
        a[(0, c)] = 2.0;
        a[(1, c)] = 2.0 * (s2 + mc * mc);
    }
    let rhs = [1.0, 1.0];
    let mut x = DVector::<f64>::zeros(m);
    x[k] = (1.0 - s2) / (2.0 * outer * outer);
    x[0] = 1.0 - 2.0 * x[k];
    let mut active: Vec<bool> = (0..m).map(|c| c != 0 && c != k).collect();
    let u = active_set_qp(&h, &lin, &a, &rhs, x, &mut active)?;
    let mut w: Vec<f64> = (0..n).map(|i| u[fold(i)].max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

fn solve_kkt(
    h: &DMatrix<f64>,
    lin: &DVector<f64>,
    a: &DMatrix<f64>,
    rhs: &[f64; 2],
    free: &[usize],
) -> Option<(DVector<f64>, [f64; 2])> {
    let f = free.len();
    let dim = f + 2;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            kkt[(r, c)] = h[(i, j)];
        }
        for q in 0..2 {
            kkt[(r, f + q)] = a[(q, i)];
            kkt[(f + q, r)] = a[(q, i)];
        }
        b[r] = -lin[i];
    }
    b[f] = rhs[0];
    b[f + 1] = rhs[1];
    let sol = kkt.clone().lu().solve(&b).filter(|s| s.iter().all(|v| v.is_finite()));
    let sol = match sol {
        Some(s) => s,
        None => kkt.svd(true, true).solve(&b, 1e-14).ok()?,
    };
    Some((sol.rows(0, f).into_owned(), [sol[f], sol[f + 1]]))
}

fn active_set_qp(
    h: &DMatrix<f64>,
    lin: &DVector<f64>,
    a: &DMatrix<f64>,
    rhs: &[f64; 2],
    mut x: DVector<f64>,
    active: &mut [bool],
) -> Option<DVector<f64>> {
    let m = x.len();
    for _ in 0..20 * m + 50 {
        let free: Vec<usize> = (0..m).filter(|&i| !active[i]).collect();
        let (xf, nu) = solve_kkt(h, lin, a, rhs, &free)?;
        let mut p = DVector::<f64>::zeros(m);
        for (r, &i) in free.iter().enumerate() {
            p[i] = xf[r] - x[i];
        }
        if p.amax() <= 1e-15 {
            let grad = h * &x + lin;
            let mut worst = None;
            for i in 0..m {
                if active[i] {
                    let mu = grad[i] + a[(0, i)] * nu[0] + a[(1, i)] * nu[1];
                    if mu < -1e-14 && worst.is_none_or(|(_, v)| mu < v) {
                        worst = Some((i, mu));
                    }
                }
            }
            match worst {
                None => return Some(x),
                Some((i, _)) => active[i] = false,
            }
        } else {
            let mut alpha = 1.0;
            let mut block = None;
            for &i in &free {
                if p[i] < 0.0 {
                    let r = -x[i] / p[i];
                    if r < alpha {
                        alpha = r;
                        block = Some(i);
                    }
                }
            }
            x += alpha * &p;
            if let Some(i) = block {
                x[i] = 0.0;
                active[i] = true;
            }
        }
    }
    None
}

fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: &F, x0: [f64; 2], max_iter: usize) -> ([f64; 2], f64) {
    let mut simplex = [x0, [x0[0] * 1.05, x0[1]], [x0[0], x0[1] * 1.05]];
    let mut vals = simplex.map(f);
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let size = (1..3)
            .map(|i| (simplex[i][0] - simplex[0][0]).abs().max((simplex[i][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if size < 1e-10 && (vals[2] - vals[0]).abs() < 1e-16 {
            break;
        }
        let c = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let at = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = at(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = at(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = at(-0.5);
                (x, f(x))
            } else {
                let x = at(0.5);
                (x, f(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    (simplex[best], vals[best])
}

fn objective(n: usize, x: [f64; 2]) -> f64 {
    let (sigma, spacing) = (x[0], x[1]);
    match fit_weights(n, sigma, spacing) {
        Some(w) => {
            let k = (n - 1) / 2;
            let means: Vec<f64> = (0..n).map(|i| (i as f64 - k as f64) * spacing).collect();
            l2_distance_sq(sigma, &means, &w) + SIGMA_PENALTY * sigma * sigma
        }
        None => 1.0 + sigma.abs() + spacing.abs(),
    }
}

/// Fits an `n`-component library (odd `n` up to [`MAX_COMPONENTS`]).
pub fn build_split_library(n: usize) -> Result<SplitLibrary1D> {
    if n == 0 || n.is_multiple_of(2) || n > MAX_COMPONENTS {
        return Err(Error::InvalidParameter(format!("component count must be odd in 1..={MAX_COMPONENTS}, got {n}")));
    }
    if n == 1 {
        return Ok(SplitLibrary1D::identity());
    }
    let scale = (n as f64 / 3.0).sqrt();
    let starts = [[0.6 / scale, 3.0 / n as f64], [0.3 / scale, 4.0 / n as f64]];
    let f = |x: [f64; 2]| objective(n, x);
    let (best, _) = starts
        .iter()
        .map(|&s| nelder_mead(&f, s, 1500))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (sigma, spacing) = (best[0], best[1]);
    let k = (n - 1) / 2;
    let weights = fit_weights(n, sigma, spacing).ok_or(Error::LibraryQuality {
        l2: f64::NAN,
        reason: "optimiser ended at an infeasible spacing".into(),
    })?;
    let means: Vec<f64> = (0..n).map(|i| (i as f64 - k as f64) * spacing).collect();
    let lib = SplitLibrary1D { sigma, means, weights };
    lib.check()?;
    if lib.l2_distance_sq() > 1e-3 {
        return Err(Error::LibraryQuality { l2: lib.l2_distance_sq(), reason: "fit too far from N(0, 1)".into() });
    }
    Ok(lib)
}
