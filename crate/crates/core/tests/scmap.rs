mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use lens_core::geometry::Point;
use lens_core::scmap::{solve_parameters, solve_parameters_with, DiskMap, ScParams};
use lens_core::{ErrorClass, LensError};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sc_corpus() -> Vec<(&'static str, Vec<Point>)> {
    vec![
        ("square", square()),
        ("rect", rect()),
        ("triangle", triangle()),
        ("L", l_shape()),
        (
            "trapezoid",
            ring(&[(0., 0.), (4., 0.), (3., 1.5), (1., 1.5)]),
        ),
        ("24-gon", regular_ngon(24, 1.0)),
    ]
}

#[test]
fn symmetric_polygons_have_equal_prevertex_gaps() {
    for (r, want) in [(square(), PI / 2.0), (triangle(), TAU / 3.0)] {
        let m = solve_parameters(&r, 8).unwrap();
        for g in gaps(&m) {
            assert!((g - want).abs() < 1e-9, "gap {g} vs {want}");
        }
        assert!((m.prevertices.last().unwrap() - TAU).abs() < 1e-15);
    }
}

#[test]
fn rectangle_side_ratio_from_boundary_integrals() {
    let m = solve_parameters(&rect(), 8).unwrap();
    let t = &m.prevertices;
    let long = arc_length(&m, t[0], t[1]);
    let short = arc_length(&m, 0.0, t[0]);
    assert!((long / short - 2.0).abs() < 1e-6, "ratio {}", long / short);
    assert!((long - 2.0).abs() < 1e-6);
}

#[test]
fn forward_map_hits_center_vertices_and_boundary() {
    for (name, r) in sc_corpus() {
        let m = solve_parameters(&r, 8).unwrap();
        let diam = m.diameter();
        assert_eq!(m.map_forward(Complex64::new(0.0, 0.0)), m.center());
        assert!(inside(&r, m.center()), "{name}");
        for k in 0..m.len() {
            let w = m.map_forward(m.prevertex(k));
            assert!(w.dist(m.vertices[k]) < 1e-6 * diam, "{name}: vertex {k}");
        }
        for i in 0..720 {
            let z = Complex64::from_polar(1.0, TAU * (i as f64 + 0.37) / 720.0);
            let w = m.map_forward(z);
            assert!(
                brute_dist(&r, w) < 1e-6 * diam,
                "{name}: boundary sample {i}"
            );
        }
    }
}

#[test]
fn inverse_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, r) in sc_corpus() {
        let m = solve_parameters(&r, 8).unwrap();
        let diam = m.diameter();
        let z0 = m.map_inverse(m.center()).unwrap();
        assert!(z0.norm() < 1e-9, "{name}: center");
        for k in 0..m.len() {
            let z = m.map_inverse(m.vertices[k]).unwrap();
            assert!((z - m.prevertex(k)).norm() < 1e-6, "{name}: vertex {k}");
        }
        for p in random_interior(&r, &mut rng, 200) {
            let z = m.map_inverse(p).unwrap();
            assert!(z.norm() < 1.0 + 1e-12);
            assert!(
                m.map_forward(z).dist(p) <= 1e-6 * diam,
                "{name}: ({}, {})",
                p.x,
                p.y
            );
        }
        for k in 0..m.len() {
            let (a, b) = (m.vertices[k], m.vertices[(k + 1) % m.len()]);
            let w = a.lerp(b, 0.3);
            let z = m.map_inverse(w).unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-6, "{name}: side {k}");
        }
    }
}

#[test]
fn outside_points_are_rejected() {
    let m = solve_parameters(&square(), 8).unwrap();
    assert!(m.map_inverse(Point::new(2.0, 0.5)).is_err());
}

#[test]
fn conformality_on_interior_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, r) in sc_corpus() {
        let m = solve_parameters(&r, 8).unwrap();
        for _ in 0..100 {
            let z = Complex64::from_polar(0.9 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
            let h = 1e-6;
            let fx = (m.map_forward(z + h) - m.map_forward(z - h)) * (0.5 / h);
            let fy = (m.map_forward(z + Complex64::i() * h)
                - m.map_forward(z - Complex64::i() * h))
                * (0.5 / h);
            let det = fx.x * fy.y - fx.y * fy.x;
            assert!(det > 0.0, "{name}");
            let cos = fx.dot(fy) / (fx.norm() * fy.norm());
            assert!(
                cos.abs() < (1f64).to_radians().sin(),
                "{name}: angle distortion"
            );
            assert!(
                (fx.norm() / fy.norm() - 1.0).abs() < 1e-3,
                "{name}: anisotropy"
            );
        }
    }
}

#[test]
fn closure_and_quadrature_convergence() {
    for (name, r) in sc_corpus() {
        let m = solve_parameters(&r, 8).unwrap();
        assert!((m.closure() - 2.0).abs() < 1e-12, "{name}");
        assert!(m.alphas.iter().all(|&a| a > 0.0 && a < 2.0));
        let lo = m.side_images_with_order(8);
        let hi = m.side_images_with_order(16);
        for k in 0..m.len() {
            let side = m.vertices[(k + 1) % m.len()].dist(m.vertices[k]);
            assert!(((lo[k] - hi[k]).norm()) / side < 1e-10, "{name}: side {k}");
            assert!(
                ((m.side_image(k)).norm() - side).abs() / side < 1e-8,
                "{name}: side length {k}"
            );
        }
    }
}

#[test]
fn serialized_maps_evaluate_identically() {
    let m = solve_parameters(&l_shape(), 8).unwrap();
    let json = serde_json::to_string(&m).unwrap();
    let back: DiskMap = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
    for i in 0..50 {
        let z = Complex64::from_polar(0.02 * i as f64, 0.7 * i as f64);
        assert_eq!(back.map_forward(z), m.map_forward(z));
    }
}

#[test]
fn solver_errors_are_classified() {
    let many = regular_ngon(40, 1.0);
    assert!(matches!(
        solve_parameters(&many, 8),
        Err(LensError::InvalidInput(_))
    ));
    let thin = ring(&[(0., 0.), (16., 0.), (16., 1.), (0., 1.)]);
    let e = solve_parameters(&thin, 8).unwrap_err();
    assert!(matches!(e, LensError::Convergence { .. }), "{e}");
    assert_eq!(e.class(), ErrorClass::Solver);
    let long = ring(&[(0., 0.), (8., 0.), (8., 1.), (0., 1.)]);
    let params = ScParams {
        crowding_gap: 1e-3,
        ..ScParams::default()
    };
    match solve_parameters_with(&long, &params) {
        Err(LensError::Crowding(a, b)) => assert_eq!((a + 1) % 4, b),
        other => panic!("expected crowding, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prevertices_are_similarity_invariant(
        which in 0usize..4,
        dx in -100.0f64..100.0,
        dy in -100.0f64..100.0,
        angle in 0.0f64..TAU,
        scale in 0.01f64..100.0,
    ) {
        let shapes = [square(), rect(), triangle(), ring(&[(0., 0.), (4., 0.), (3., 1.5), (1., 1.5)])];
        let r = &shapes[which];
        let (s, c) = angle.sin_cos();
        let moved: Vec<Point> = r
            .iter()
            .map(|p| Point::new(dx + scale * (c * p.x - s * p.y), dy + scale * (s * p.x + c * p.y)))
            .collect();
        let a = solve_parameters(r, 8).unwrap();
        let b = solve_parameters(&moved, 8).unwrap();
        for (x, y) in a.prevertices.iter().zip(&b.prevertices) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn prevertices_increase_strictly(h in 0.5f64..2.0, top in 0.5f64..3.5) {
        let r = ring(&[(0., 0.), (4., 0.), (top + 0.5, h), (top - 0.5, h)]);
        let m = solve_parameters(&r, 8).unwrap();
        prop_assert!(m.prevertices.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(m.prevertices[0] > 0.0);
        prop_assert!(m.residual <= 1e-8);
    }
}
