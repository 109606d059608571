//! Orientation and in-circle predicates evaluated in double-double arithmetic.

use std::cmp::Ordering;

/// Relative tolerance below which a predicate is reported as zero.
pub const PREDICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    fn from_diff(a: f64, b: f64) -> Dd {
        two_sum(a, -b)
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        Dd::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        Dd::renorm(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn classify(det: f64, permanent: f64) -> Ordering {
    if det.abs() <= PREDICATE_TOL * permanent {
        Ordering::Equal
    } else if det > 0.0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Twice the signed area of (a, b, c) in double-double precision.
pub fn orient2d_value(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> (f64, f64) {
    let bax = Dd::from_diff(b[0], a[0]);
    let bay = Dd::from_diff(b[1], a[1]);
    let cax = Dd::from_diff(c[0], a[0]);
    let cay = Dd::from_diff(c[1], a[1]);
    let det = bax.mul(cay).sub(bay.mul(cax)).value();
    let perm = (bax.hi * cay.hi).abs() + (bay.hi * cax.hi).abs();
    (det, perm)
}

/// Sign of the orientation of (a, b, c): Greater means counter-clockwise.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let (det, perm) = orient2d_value(a, b, c);
    classify(det, perm)
}

/// Greater when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Ordering {
    let adx = Dd::from_diff(a[0], d[0]);
    let ady = Dd::from_diff(a[1], d[1]);
    let bdx = Dd::from_diff(b[0], d[0]);
    let bdy = Dd::from_diff(b[1], d[1]);
    let cdx = Dd::from_diff(c[0], d[0]);
    let cdy = Dd::from_diff(c[1], d[1]);
    let alift = adx.mul(adx).add(ady.mul(ady));
    let blift = bdx.mul(bdx).add(bdy.mul(bdy));
    let clift = cdx.mul(cdx).add(cdy.mul(cdy));
    let bc = bdx.mul(cdy).sub(cdx.mul(bdy));
    let ca = cdx.mul(ady).sub(adx.mul(cdy));
    let ab = adx.mul(bdy).sub(bdx.mul(ady));
    let det = alift.mul(bc).add(blift.mul(ca)).add(clift.mul(ab)).value();
    let perm = alift.hi * ((bdx.hi * cdy.hi).abs() + (cdx.hi * bdy.hi).abs())
        + blift.hi * ((cdx.hi * ady.hi).abs() + (adx.hi * cdy.hi).abs())
        + clift.hi * ((adx.hi * bdy.hi).abs() + (bdx.hi * ady.hi).abs());
    classify(det, perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        assert_eq!(orient2d([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), Ordering::Greater);
        assert_eq!(orient2d([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), Ordering::Less);
        assert_eq!(orient2d([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]), Ordering::Equal);
    }

    #[test]
    fn nearly_collinear_resolved_beyond_f64() {
        let a = [0.1, 0.1];
        let b = [0.3, 0.3];
        let c = [0.7, 0.7 + 1e-9];
        assert_eq!(orient2d(a, b, c), Ordering::Greater);
    }

    #[test]
    fn incircle_signs() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert_eq!(incircle(a, b, c, [0.5, 0.5 - 1e-3]), Ordering::Greater);
        assert_eq!(incircle(a, b, c, [2.0, 2.0]), Ordering::Less);
        assert_eq!(incircle(a, b, c, [1.0, 1.0]), Ordering::Equal);
    }
}
