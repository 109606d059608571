use proptest::prelude::*;

use odl::analysis::sample_moments;
use odl::geometry::{delaunay, interp_linear};
use odl::gmmut::{
    build_split_library, merge_moments, sigma_points, split_gaussian, ut_transform, ut_weights, UTConfig, NVAR,
};
use odl::histogram::{Method, dee_joint, make_edges, marginal, mc_joint, BinGrid};
use odl::io;
use odl::stochastics::Gaussian2D;

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| [a, b])
}

fn spd() -> impl Strategy<Value = [[f64; 2]; 2]> {
    (0.01..2.0f64, 0.01..2.0f64, -0.95..0.95f64).prop_map(|(s1, s2, r)| {
        let c = r * s1 * s2;
        [[s1 * s1, c], [c, s2 * s2]]
    })
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> ([f64; 2], f64) {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let sa = a[0] * a[0] + a[1] * a[1];
    let sb = b[0] * b[0] + b[1] * b[1];
    let sc = c[0] * c[0] + c[1] * c[1];
    let ux = (sa * (b[1] - c[1]) + sb * (c[1] - a[1]) + sc * (a[1] - b[1])) / d;
    let uy = (sa * (c[0] - b[0]) + sb * (a[0] - c[0]) + sc * (b[0] - a[0])) / d;
    let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
    ([ux, uy], r2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_are_invariant_to_weight_scale(
        pts in prop::collection::vec(point(), 2..60),
        seed_w in prop::collection::vec(0.1..5.0f64, 60),
        k in 1e-3..1e3f64,
    ) {
        let w: Vec<f64> = seed_w[..pts.len()].to_vec();
        let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
        let a = sample_moments(&pts, Some(&w), 0.0, Method::Mc).unwrap().as_array();
        let b = sample_moments(&pts, Some(&scaled), 0.0, Method::Mc).unwrap().as_array();
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        prop_assert!(a[1] >= 0.0 && a[3] >= 0.0);
    }

    #[test]
    fn constant_weights_match_unweighted(pts in prop::collection::vec(point(), 2..40), c in 0.1..10.0f64) {
        let w = vec![c; pts.len()];
        let a = sample_moments(&pts, Some(&w), 0.0, Method::Mc).unwrap().as_array();
        let b = sample_moments(&pts, None, 0.0, Method::Mc).unwrap().as_array();
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn ut_weights_sum_to_one(alpha in 0.05..1.0f64, beta in -1.0..3.0f64, eta in 0.0..4.0f64) {
        let cfg = UTConfig { alpha, beta, eta };
        if let Ok(w) = ut_weights(&cfg, NVAR) {
            let s: f64 = w.mean.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-10 * w.mean.iter().map(|v| v.abs()).sum::<f64>());
            prop_assert_eq!(w.mean.len(), 2 * NVAR + 1);
        }
    }

    #[test]
    fn ut_recovers_gaussian(m in point(), p in spd()) {
        let cfg = UTConfig::default();
        let pts = sigma_points(m, &p, &cfg).unwrap();
        let (mean, cov) = ut_transform(&pts, &cfg).unwrap();
        for i in 0..2 {
            prop_assert!((mean[i] - m[i]).abs() <= 1e-12 * (1.0 + m[i].abs()));
            for j in 0..2 {
                prop_assert!((cov[i][j] - p[i][j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn split_then_merge_preserves_moments(m in point(), p in spd(), axis in 0usize..2) {
        let lib = odl::gmmut::cached_split_library(39).unwrap();
        let g = Gaussian2D::new(m, p).unwrap();
        let mix = split_gaussian(&g, &lib, axis).unwrap();
        prop_assert!((mix.weight_sum() - 1.0).abs() <= 1e-12);
        let (mean, cov) = merge_moments(&mix).unwrap();
        for i in 0..2 {
            prop_assert!((mean[i] - m[i]).abs() <= 1e-9 * (1.0 + m[i].abs()));
            for j in 0..2 {
                prop_assert!((cov[i][j] - p[i][j]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn delaunay_is_empty_circle_and_interpolates_linear(pts in prop::collection::vec(point(), 3..50), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let Ok(tri) = delaunay(&pts) else { return Ok(()) };
        let v = tri.vertices();
        for t in tri.triangles() {
            let (c, r2) = circumcircle(v[t[0]], v[t[1]], v[t[2]]);
            for (k, q) in v.iter().enumerate() {
                if t.contains(&k) {
                    continue;
                }
                let d2 = (q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2);
                prop_assert!(d2 >= r2 * (1.0 - 1e-7), "vertex {k} inside circumcircle");
            }
        }
        let f = |q: [f64; 2]| 0.5 + a * q[0] + b * q[1];
        let vals: Vec<f64> = v.iter().map(|q| f(*q)).collect();
        for q in v {
            let got = interp_linear(&tri, &vals, *q).unwrap().unwrap();
            prop_assert!((got - f(*q)).abs() <= 1e-9);
        }
        prop_assert!(interp_linear(&tri, &vals, [50.0, 50.0]).unwrap().is_none());
    }

    #[test]
    fn histograms_are_normalized(pts in prop::collection::vec(point(), 2..200), nb in 1usize..12, w in prop::collection::vec(0.0..3.0f64, 200)) {
        let Ok(grid) = make_edges(&pts, nb, nb + 1) else { return Ok(()) };
        let joint = mc_joint(&pts, &grid).unwrap();
        prop_assert!((joint.total_mass() - 1.0).abs() <= 1e-12);
        for axis in 0..2 {
            prop_assert!((marginal(&joint, axis).total_mass() - 1.0).abs() <= 1e-12);
        }
        let mut w = w[..pts.len()].to_vec();
        w[0] += 0.5;
        let joint = dee_joint(&pts, &w, &grid).unwrap();
        prop_assert!((joint.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bin_index_matches_edges(lo in -5.0..0.0f64, span in 0.1..10.0f64, n in 1usize..40, u in 0.0..1.0f64) {
        let grid = BinGrid::uniform([lo, lo], [lo + span, lo + span], [n, n]).unwrap();
        let x = lo + u * span;
        let i = grid.axis_index(0, x).unwrap();
        let e = grid.edges(0);
        prop_assert!(e[i] <= x && (x < e[i + 1] || i == n - 1));
    }

    #[test]
    fn parsers_never_panic(text in ".{0,400}") {
        let _ = odl::scenario::ScenarioConfig::from_toml_str(&text);
        let _ = io::library_from_csv(&text);
        let _ = io::mixture_from_json(&text);
        let _ = io::joint_from_csv(&text);
    }

    #[test]
    fn joint_csv_round_trips(nb in 1usize..6, vals in prop::collection::vec(0.0..1e3f64, 36)) {
        let grid = BinGrid::uniform([0.0, -1.0], [std::f64::consts::TAU, 1.0], [nb, nb + 1]).unwrap();
        let pts: Vec<[f64; 2]> = (0..nb * (nb + 1))
            .map(|k| {
                let c0 = grid.centers(0)[k / (nb + 1)];
                let c1 = grid.centers(1)[k % (nb + 1)];
                [c0, c1]
            })
            .collect();
        let mut w = vals[..pts.len()].to_vec();
        w[0] += 1.0;
        let joint = dee_joint(&pts, &w, &grid).unwrap().with_meta(1.5, ["phi", "e"]);
        let back = io::joint_from_csv(&io::joint_to_csv(&joint).unwrap()).unwrap();
        prop_assert_eq!(back, joint);
    }
}

#[test]
fn split_libraries_satisfy_moment_constraints() {
    let mut prev_sigma = f64::INFINITY;
    for n in (1..=39).step_by(2) {
        let lib = build_split_library(n).unwrap();
        assert_eq!(lib.len(), n);
        assert!((lib.weight_sum() - 1.0).abs() <= 1e-12, "n = {n}");
        assert!(lib.first_moment().abs() <= 1e-12, "n = {n}");
        assert!((lib.second_moment() - 1.0).abs() <= 1e-2, "n = {n}");
        assert!(lib.weights.iter().all(|w| *w > 0.0 && *w <= 1.0), "n = {n}");
        for k in 0..n {
            assert!((lib.means[k] + lib.means[n - 1 - k]).abs() <= 1e-12);
            assert!((lib.weights[k] - lib.weights[n - 1 - k]).abs() <= 1e-12);
        }
        assert!(lib.sigma < prev_sigma && lib.l2_distance_sq() < 1e-5, "n = {n}");
        prev_sigma = lib.sigma;
    }
}
