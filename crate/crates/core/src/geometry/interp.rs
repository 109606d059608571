//! Barycentric interpolation over a triangulation, restricted to its hull.

use std::cmp::Ordering;

use super::delaunay::Triangulation;
use super::predicates::orient2d;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

fn area2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

impl Triangulation {
    fn barycentric(&self, t: usize, q: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let d = area2(a, b, c);
        [area2(q, b, c) / d, area2(a, q, c) / d, area2(a, b, q) / d]
    }

    /// Locates `q` by a straight walk from `hint`; `None` outside the hull.
    pub fn locate(&self, q: [f64; 2], hint: &mut usize) -> Option<Location> {
        if self.triangles().is_empty() {
            return None;
        }
        let mut t = (*hint).min(self.triangles().len() - 1);
        let limit = 4 * self.triangles().len() + 16;
        let mut rot = 0usize;
        'walk: for _ in 0..limit {
            let v = self.triangles()[t];
            rot = (rot + 1) % 3;
            for i in 0..3 {
                let k = (rot + i) % 3;
                let a = self.vertices()[v[(k + 1) % 3]];
                let b = self.vertices()[v[(k + 2) % 3]];
                if orient2d(a, b, q) == Ordering::Less {
                    match self.adjacency()[t][k] {
                        Some(n) => {
                            t = n;
                            continue 'walk;
                        }
                        None => {
                            *hint = t;
                            return None;
                        }
                    }
                }
            }
            *hint = t;
            return Some(Location { triangle: t, barycentric: self.barycentric(t, q) });
        }
        self.locate_brute(q)
    }

    /// Exhaustive point location, used as an oracle and as a walk fallback.
    pub fn locate_brute(&self, q: [f64; 2]) -> Option<Location> {
        (0..self.triangles().len())
            .find(|&t| {
                let [a, b, c] = self.triangle_points(t);
                orient2d(a, b, q) != Ordering::Less
                    && orient2d(b, c, q) != Ordering::Less
                    && orient2d(c, a, q) != Ordering::Less
            })
            .map(|t| Location { triangle: t, barycentric: self.barycentric(t, q) })
    }

    fn weighted(&self, loc: &Location, values: &[f64]) -> f64 {
        let v = self.triangles()[loc.triangle];
        let l = loc.barycentric;
        l[0] * values[v[0]] + l[1] * values[v[1]] + l[2] * values[v[2]]
    }
}

fn check_len(tri: &Triangulation, values: &[f64]) -> Result<()> {
    if values.len() != tri.vertices().len() {
        return Err(Error::InvalidParameter(format!(
            "{} node values for {} vertices",
            values.len(),
            tri.vertices().len()
        )));
    }
    Ok(())
}

/// Linear interpolation at `query`, or `None` outside the convex hull.
pub fn interp_linear(tri: &Triangulation, node_values: &[f64], query: [f64; 2]) -> Result<Option<f64>> {
    check_len(tri, node_values)?;
    let mut hint = 0;
    Ok(tri.locate(query, &mut hint).map(|loc| tri.weighted(&loc, node_values)))
}

/// Uniform node coordinates spanning `[lo, hi]` with both ends exact.
pub fn axis_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * step }).collect()
}

/// Axis-aligned bounding box of a point set as `([xmin, ymin], [xmax, ymax])`.
pub fn bounding_box(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Interpolates one grid row at height `y`, reusing the walk hint across columns.
pub fn interp_row(
    tri: &Triangulation,
    node_values: &[f64],
    xs: &[f64],
    y: f64,
    hint: &mut usize,
    out: &mut Vec<Option<f64>>,
) {
    out.clear();
    out.extend(xs.iter().map(|&x| tri.locate([x, y], hint).map(|loc| tri.weighted(&loc, node_values))));
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major over (x index, y index); `NaN` where the mask is false.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl InterpGrid {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.ys.len() + j;
        self.mask[k].then(|| self.values[k])
    }

    /// Iterates over masked-in nodes as (x, y, value).
    pub fn inside(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ny = self.ys.len();
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(k, _)| {
            (self.xs[k / ny], self.ys[k % ny], self.values[k])
        })
    }
}

/// Interpolates onto an `n1 x n2` node grid spanning the vertex bounding box.
pub fn interp_to_grid(tri: &Triangulation, node_values: &[f64], n1: usize, n2: usize) -> Result<InterpGrid> {
    check_len(tri, node_values)?;
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 nodes per axis, got {n1}x{n2}")));
    }
    let (lo, hi) = bounding_box(tri.vertices());
    let xs = axis_nodes(lo[0], hi[0], n1);
    let ys = axis_nodes(lo[1], hi[1], n2);
    let mut values = vec![f64::NAN; n1 * n2];
    let mut mask = vec![false; n1 * n2];
    let mut hint = 0;
    let mut row = Vec::with_capacity(n1);
    for (j, &y) in ys.iter().enumerate() {
        interp_row(tri, node_values, &xs, y, &mut hint, &mut row);
        for (i, v) in row.iter().enumerate() {
            if let Some(v) = v {
                values[i * n2 + j] = *v;
                mask[i * n2 + j] = true;
            }
        }
    }
    Ok(InterpGrid { xs, ys, values, mask })
}

#[cfg(test)]
mod tests {
    use super::super::delaunay::delaunay;
    use super::*;

    fn cloud() -> Vec<[f64; 2]> {
        let mut s = 12345u64;
        (0..200)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 11) as f64 / (1u64 << 53) as f64;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (s >> 11) as f64 / (1u64 << 53) as f64;
                [a * 3.0 - 1.0, b * 0.5]
            })
            .collect()
    }

    #[test]
    fn vertex_values_recovered_exactly() {
        let pts = cloud();
        let tri = delaunay(&pts).unwrap();
        let vals: Vec<f64> = pts.iter().map(|p| (p[0] * 7.0).sin() + p[1]).collect();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(interp_linear(&tri, &vals, *p).unwrap(), Some(vals[i]));
        }
    }

    #[test]
    fn outside_is_missing() {
        let tri = delaunay(&cloud()).unwrap();
        let vals = vec![1.0; 200];
        assert_eq!(interp_linear(&tri, &vals, [5.0, 5.0]).unwrap(), None);
        assert_eq!(interp_linear(&tri, &vals, [-1.5, 0.2]).unwrap(), None);
    }

    #[test]
    fn constant_field_on_grid() {
        let pts = cloud();
        let tri = delaunay(&pts).unwrap();
        let g = interp_to_grid(&tri, &vec![7.0; pts.len()], 40, 30).unwrap();
        assert!(g.mask.iter().any(|&m| m));
        for (k, &m) in g.mask.iter().enumerate() {
            if m {
                assert!((g.values[k] - 7.0).abs() < 1e-13);
            } else {
                assert!(g.values[k].is_nan());
            }
        }
    }
}
