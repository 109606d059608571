//! Counter-based random streams, bivariate Gaussians and closed-form 2x2 algebra.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitmix64 stream addressed by (seed, counter). Output `k` depends only on
/// the seed and the absolute counter, so disjoint counter ranges are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn at(seed: u64, counter: u64) -> Self {
        Self { seed, counter }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1].
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One Box-Muller pair of independent standard normals; consumes two uniforms.
    pub fn next_normal_pair(&mut self) -> Vec2 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let th = TAU * u2;
        [r * libm::cos(th), r * libm::sin(th)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2D {
    pub mean: Vec2,
    pub cov: Mat2,
}

impl Gaussian2D {
    pub fn new(mean: Vec2, cov: Mat2) -> Result<Self> {
        sqrt_spd2(&cov)?;
        Ok(Self { mean, cov })
    }

    pub fn diagonal(mean: Vec2, sd: Vec2) -> Result<Self> {
        Self::new(mean, [[sd[0] * sd[0], 0.0], [0.0, sd[1] * sd[1]]])
    }
}

/// Draws `n` samples, each from one Box-Muller pair, starting at the stream's counter.
pub fn sample_gaussian2d(g: &Gaussian2D, n: usize, rng: &mut RngStream) -> Result<Vec<Vec2>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let l = sqrt_spd2(&g.cov)?;
    Ok((0..n)
        .map(|_| {
            let z = rng.next_normal_pair();
            [g.mean[0] + l[0][0] * z[0], g.mean[1] + l[1][0] * z[0] + l[1][1] * z[1]]
        })
        .collect())
}

pub fn pdf_gaussian2d(g: &Gaussian2D, x: Vec2) -> Result<f64> {
    Ok(ln_pdf_gaussian2d(g, x)?.exp())
}

pub fn ln_pdf_gaussian2d(g: &Gaussian2D, x: Vec2) -> Result<f64> {
    let l = sqrt_spd2(&g.cov)?;
    let d0 = x[0] - g.mean[0];
    let d1 = x[1] - g.mean[1];
    let z0 = d0 / l[0][0];
    let z1 = (d1 - l[1][0] * z0) / l[1][1];
    Ok(-0.5 * (z0 * z0 + z1 * z1) - (TAU * l[0][0] * l[1][1]).ln())
}

/// Eigen-decomposition of a symmetric 2x2 matrix. Eigenvalues descend; the
/// eigenvectors are the columns of the returned matrix.
pub fn eig_sym2(m: &Mat2) -> (Vec2, Mat2) {
    let a = m[0][0];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let d = m[1][1];
    let mid = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b);
    let l1 = mid + r;
    let l2 = mid - r;
    if r == 0.0 {
        return ([l1, l2], [[1.0, 0.0], [0.0, 1.0]]);
    }
    let (vx, vy) = if a >= d { (l1 - d, b) } else { (b, l1 - a) };
    let n = vx.hypot(vy);
    let (vx, vy) = (vx / n, vy / n);
    ([l1, l2], [[vx, -vy], [vy, vx]])
}

/// Lower-triangular Cholesky factor of an SPD 2x2 matrix.
pub fn sqrt_spd2(m: &Mat2) -> Result<Mat2> {
    let a = m[0][0];
    let b = m[1][0];
    let d = m[1][1];
    if !(a > 0.0) || !a.is_finite() || !m[0][1].is_finite() || (m[0][1] - b).abs() > 1e-12 * (a.abs() + d.abs()) {
        return Err(Error::NotPositiveDefinite);
    }
    let l00 = a.sqrt();
    let l10 = b / l00;
    let rem = d - l10 * l10;
    if !(rem > 0.0) || !rem.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok([[l00, 0.0], [l10, rem.sqrt()]])
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn symmetrize(a: &Mat2) -> Mat2 {
    let off = 0.5 * (a[0][1] + a[1][0]);
    [[a[0][0], off], [off, a[1][1]]]
}

pub fn frobenius(a: &Mat2) -> f64 {
    (a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1]).sqrt()
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_counter_addressed() {
        let mut a = RngStream::new(7);
        let first: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
        let mut b = RngStream::at(7, 4);
        assert_eq!(b.next_u64(), first[4]);
    }

    #[test]
    fn splitmix_reference_value() {
        // Reference splitmix64 seeded with 0 yields 0xE220A8397B1DCDAF first.
        assert_eq!(RngStream::new(0).next_u64(), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn vanishing_covariance_collapses_samples() {
        let g = Gaussian2D::new([1.0, 2.0], [[1e-20, 0.0], [0.0, 1e-20]]).unwrap();
        let s = sample_gaussian2d(&g, 100, &mut RngStream::new(1)).unwrap();
        assert!(s.iter().all(|x| (x[0] - 1.0).abs() < 1e-8 && (x[1] - 2.0).abs() < 1e-8));
    }

    #[test]
    fn pdf_values() {
        let g = Gaussian2D::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((pdf_gaussian2d(&g, [0.0, 0.0]).unwrap() - 1.0 / TAU).abs() < 1e-16);
        let g = Gaussian2D::new([1.0, -1.0], [[2.0, 0.3], [0.3, 0.5]]).unwrap();
        let v = [0.4, -0.7];
        let p = pdf_gaussian2d(&g, [1.0 + v[0], -1.0 + v[1]]).unwrap();
        let q = pdf_gaussian2d(&g, [1.0 - v[0], -1.0 - v[1]]).unwrap();
        assert!((p - q).abs() <= 1e-15 * p);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let g = Gaussian2D::new([0.5, 0.1], [[0.04, 0.003], [0.003, 0.0009]]).unwrap();
        let l = sqrt_spd2(&g.cov).unwrap();
        let sx = g.cov[0][0].sqrt();
        let sy = g.cov[1][1].sqrt();
        let n = 600;
        let hx = 12.0 * sx / n as f64;
        let hy = 12.0 * sy / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = g.mean[0] - 6.0 * sx + i as f64 * hx;
                let y = g.mean[1] - 6.0 * sy + j as f64 * hy;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 } * if j == 0 || j == n { 0.5 } else { 1.0 };
                total += w * pdf_gaussian2d(&g, [x, y]).unwrap();
            }
        }
        total *= hx * hy;
        assert!(l[1][1] > 0.0);
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn eig_examples() {
        let (l, v) = eig_sym2(&[[4.0, 0.0], [0.0, 1.0]]);
        assert_eq!(l, [4.0, 1.0]);
        assert_eq!(v, [[1.0, 0.0], [0.0, 1.0]]);
        let (l, _) = eig_sym2(&[[2.0, 1.0], [1.0, 2.0]]);
        assert!((l[0] - 3.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        assert!(sqrt_spd2(&[[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(sqrt_spd2(&[[0.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(Gaussian2D::new([0.0, 0.0], [[-1.0, 0.0], [0.0, 1.0]]).is_err());
    }
}
