//! Incremental Bowyer-Watson triangulation closed by ghost triangles.
//!
//! Every hull edge is paired with a ghost triangle sharing a vertex at
//! infinity, so the convex hull is exact and no super-triangle vertices have to
//! be stripped afterwards.

use std::cmp::Ordering;

use super::predicates::{incircle, orient2d};
use crate::error::{Error, Result};

/// Points closer than this are merged into one vertex.
pub const DUPLICATE_TOL: f64 = 1e-12;

const GHOST: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// `adjacency[t][k]` is the triangle across the edge opposite vertex `k`.
    adjacency: Vec<[Option<usize>; 3]>,
    /// Maps each input point to the vertex index that represents it.
    representative: Vec<usize>,
}

impl Triangulation {
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn adjacency(&self) -> &[[Option<usize>; 3]] {
        &self.adjacency
    }

    /// Vertex index for each input point; merged duplicates share an index.
    pub fn representative(&self) -> &[usize] {
        &self.representative
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            })
            .sum()
    }
}

struct Builder<'a> {
    pts: &'a [[f64; 2]],
    tri: Vec<[usize; 3]>,
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    last: usize,
    stamp: Vec<u32>,
    epoch: u32,
}

fn is_ghost(t: &[usize; 3]) -> bool {
    t[2] == GHOST
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

impl<'a> Builder<'a> {
    fn p(&self, v: usize) -> [f64; 2] {
        self.pts[v]
    }

    fn alloc(&mut self, t: [usize; 3]) -> usize {
        if let Some(i) = self.free.pop() {
            self.tri[i] = t;
            self.nbr[i] = [GHOST; 3];
            self.alive[i] = true;
            self.stamp[i] = 0;
            i
        } else {
            self.tri.push(t);
            self.nbr.push([GHOST; 3]);
            self.alive.push(true);
            self.stamp.push(0);
            self.tri.len() - 1
        }
    }

    fn init(&mut self, a: usize, b: usize, c: usize) {
        let (b, c) = if orient2d(self.p(a), self.p(b), self.p(c)) == Ordering::Greater { (b, c) } else { (c, b) };
        let t0 = self.alloc([a, b, c]);
        // Ghost across the edge opposite vertex k of t0.
        let g0 = self.alloc([c, b, GHOST]);
        let g1 = self.alloc([a, c, GHOST]);
        let g2 = self.alloc([b, a, GHOST]);
        self.nbr[t0] = [g0, g1, g2];
        // Ghost [u, v, G]: nbr[0] across (v, G), nbr[1] across (G, u), nbr[2] = real.
        self.nbr[g0] = [g2, g1, t0];
        self.nbr[g1] = [g0, g2, t0];
        self.nbr[g2] = [g1, g0, t0];
        self.last = t0;
    }

    fn in_conflict(&self, t: usize, q: [f64; 2]) -> bool {
        let v = self.tri[t];
        if is_ghost(&v) {
            let (a, b) = (self.p(v[0]), self.p(v[1]));
            match orient2d(a, b, q) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => {
                    let dot = (q[0] - a[0]) * (b[0] - a[0]) + (q[1] - a[1]) * (b[1] - a[1]);
                    dot > 0.0 && dot < dist2(a, b)
                }
            }
        } else {
            incircle(self.p(v[0]), self.p(v[1]), self.p(v[2]), q) == Ordering::Greater
        }
    }

    fn locate(&self, q: [f64; 2]) -> usize {
        let mut t = self.last;
        if !self.alive[t] {
            t = self.alive.iter().position(|&a| a).expect("live triangle");
        }
        if is_ghost(&self.tri[t]) {
            t = self.nbr[t][2];
        }
        let limit = 4 * self.tri.len() + 16;
        let mut rot = 0usize;
        'walk: for _ in 0..limit {
            let v = self.tri[t];
            if is_ghost(&v) {
                return t;
            }
            rot = (rot + 1) % 3;
            for i in 0..3 {
                let k = (rot + i) % 3;
                let a = self.p(v[(k + 1) % 3]);
                let b = self.p(v[(k + 2) % 3]);
                if orient2d(a, b, q) == Ordering::Less {
                    t = self.nbr[t][k];
                    continue 'walk;
                }
            }
            return t;
        }
        self.brute_locate(q)
    }

    fn brute_locate(&self, q: [f64; 2]) -> usize {
        let mut fallback = None;
        for t in 0..self.tri.len() {
            if !self.alive[t] {
                continue;
            }
            if self.in_conflict(t, q) {
                if !is_ghost(&self.tri[t]) {
                    return t;
                }
                fallback.get_or_insert(t);
            }
        }
        fallback.unwrap_or(self.last)
    }

    /// Inserts point `pi`; returns the index of a vertex it duplicates, if any.
    fn insert(&mut self, pi: usize) -> Option<usize> {
        let q = self.p(pi);
        let mut start = self.locate(q);
        for &v in &self.tri[start] {
            if v != GHOST && dist2(self.p(v), q) <= DUPLICATE_TOL * DUPLICATE_TOL {
                return Some(v);
            }
        }
        if !self.in_conflict(start, q) {
            start = self.brute_locate(q);
        }
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.stamp[start] = epoch;
        let mut boundary: Vec<(usize, usize, usize)>;
        let mut head = 0;
        loop {
            while head < cavity.len() {
                let t = cavity[head];
                head += 1;
                for k in 0..3 {
                    let n = self.nbr[t][k];
                    if self.stamp[n] != epoch && self.in_conflict(n, q) {
                        self.stamp[n] = epoch;
                        cavity.push(n);
                    }
                }
            }
            // Boundary edges as (a, b, outside neighbour), oriented as in the cavity triangle.
            boundary = Vec::new();
            let mut grow = None;
            for &t in &cavity {
                let v = self.tri[t];
                for k in 0..3 {
                    let n = self.nbr[t][k];
                    if self.stamp[n] == epoch {
                        continue;
                    }
                    let a = v[(k + 1) % 3];
                    let b = v[(k + 2) % 3];
                    if a != GHOST && b != GHOST && orient2d(self.p(a), self.p(b), q) != Ordering::Greater {
                        grow = Some(n);
                        break;
                    }
                    boundary.push((a, b, n));
                }
                if grow.is_some() {
                    break;
                }
            }
            match grow {
                Some(n) => {
                    self.stamp[n] = epoch;
                    cavity.push(n);
                }
                None => break,
            }
        }
        for &t in &cavity {
            for &v in &self.tri[t] {
                if v != GHOST && dist2(self.p(v), q) <= DUPLICATE_TOL * DUPLICATE_TOL {
                    return Some(v);
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
            self.free.push(t);
        }
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            // New triangle (a, b, q) normalised so a ghost vertex sits last.
            let (tv, opp_slot) = if a == GHOST {
                ([b, pi, GHOST], 1)
            } else if b == GHOST {
                ([pi, a, GHOST], 0)
            } else {
                ([a, b, pi], 2)
            };
            let nt = self.alloc(tv);
            self.nbr[nt][opp_slot] = outside;
            let ov = self.tri[outside];
            for k in 0..3 {
                let x = ov[(k + 1) % 3];
                let y = ov[(k + 2) % 3];
                if x == b && y == a {
                    self.nbr[outside][k] = nt;
                }
            }
            created.push(nt);
        }
        // Link new triangles to each other across the edges incident to q.
        let mut edges: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(2 * created.len());
        for &nt in &created {
            let v = self.tri[nt];
            for k in 0..3 {
                let x = v[(k + 1) % 3];
                let y = v[(k + 2) % 3];
                if x == pi || y == pi {
                    edges.push((x, y, nt, k));
                }
            }
        }
        for i in 0..edges.len() {
            let (x, y, nt, k) = edges[i];
            if let Some(&(_, _, mt, _)) = edges.iter().find(|e| e.0 == y && e.1 == x) {
                self.nbr[nt][k] = mt;
            }
        }
        self.last = created
            .iter()
            .copied()
            .find(|&t| !is_ghost(&self.tri[t]))
            .unwrap_or(created[0]);
        None
    }
}

fn hilbert_index(x: u32, y: u32, order: u32) -> u64 {
    let n: u64 = 1 << order;
    let (mut x, mut y) = (u64::from(x), u64::from(y));
    let mut d: u64 = 0;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

fn insertion_order(pts: &[[f64; 2]]) -> Vec<usize> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    const ORDER: u32 = 16;
    let scale = f64::from((1u32 << ORDER) - 1);
    let key = |p: &[f64; 2]| -> u64 {
        let q = |k: usize| -> u32 {
            let span = hi[k] - lo[k];
            if span > 0.0 {
                (((p[k] - lo[k]) / span) * scale).round() as u32
            } else {
                0
            }
        };
        hilbert_index(q(0), q(1), ORDER)
    };
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by_key(|&i| (key(&pts[i]), i));
    idx
}

/// Delaunay triangulation of `points`. Points within [`DUPLICATE_TOL`] of an
/// earlier vertex are merged; vertex indices refer to the input order.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Triangulation> {
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Degenerate("non-finite point in triangulation input".into()));
    }
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", points.len())));
    }
    let order = insertion_order(points);
    let first = order[0];
    let second = order
        .iter()
        .copied()
        .find(|&i| dist2(points[i], points[first]) > DUPLICATE_TOL * DUPLICATE_TOL)
        .ok_or_else(|| Error::Degenerate("all points coincide".into()))?;
    let third = order
        .iter()
        .copied()
        .find(|&i| orient2d(points[first], points[second], points[i]) != Ordering::Equal)
        .ok_or_else(|| Error::Degenerate("all points are collinear".into()))?;

    let n = points.len();
    let mut b = Builder {
        pts: points,
        tri: Vec::with_capacity(2 * n + 8),
        nbr: Vec::with_capacity(2 * n + 8),
        alive: Vec::with_capacity(2 * n + 8),
        free: Vec::new(),
        last: 0,
        stamp: Vec::with_capacity(2 * n + 8),
        epoch: 0,
    };
    b.init(first, second, third);
    let mut representative: Vec<usize> = (0..n).collect();
    for &i in &order {
        if i == first || i == second || i == third {
            continue;
        }
        if let Some(v) = b.insert(i) {
            representative[i] = v;
        }
    }

    let mut remap = vec![usize::MAX; b.tri.len()];
    let mut triangles = Vec::new();
    for t in 0..b.tri.len() {
        if b.alive[t] && !is_ghost(&b.tri[t]) {
            remap[t] = triangles.len();
            triangles.push(b.tri[t]);
        }
    }
    let mut adjacency = Vec::with_capacity(triangles.len());
    for t in 0..b.tri.len() {
        if remap[t] == usize::MAX {
            continue;
        }
        let nb = b.nbr[t];
        adjacency.push(nb.map(|x| if remap[x] == usize::MAX { None } else { Some(remap[x]) }));
    }
    Ok(Triangulation { vertices: points.to_vec(), triangles, adjacency, representative })
}
