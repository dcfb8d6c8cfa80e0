mod common;

use std::f64::consts::PI;

use patchflow::curve::{
    bilipschitz_constant, holder_seminorm, param, preset_shape, Shape, VectorFieldOnCurve,
};
use patchflow::{Mat2, Point};
use proptest::prelude::*;

fn field(values: &[(f64, f64)]) -> VectorFieldOnCurve {
    VectorFieldOnCurve::new(values.iter().map(|&(x, y)| Point::new(x, y)).collect())
}

proptest! {
    #[test]
    fn holder_is_symmetric_and_homogeneous(
        values in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 8..40),
        gamma in 0.05..0.95f64,
        lambda in -5.0..5.0f64,
        shift in 0usize..40,
    ) {
        let f = field(&values);
        let h = holder_seminorm(&f, gamma);
        // relabelling markers in reverse or cyclically preserves chordal distances
        let n = values.len();
        let reversed = VectorFieldOnCurve::new((0..n).map(|i| f.values[(n - i) % n]).collect());
        let rotated = VectorFieldOnCurve::new((0..n).map(|i| f.values[(i + shift) % n]).collect());
        prop_assert!((holder_seminorm(&reversed, gamma) - h).abs() <= 1e-12 * h.max(1.0));
        prop_assert!((holder_seminorm(&rotated, gamma) - h).abs() <= 1e-12 * h.max(1.0));
        let scaled = holder_seminorm(&f.scaled(lambda), gamma);
        prop_assert!((scaled - lambda.abs() * h).abs() <= 1e-12 * h.max(1.0) * lambda.abs().max(1.0));
    }

    #[test]
    fn holder_is_nonincreasing_in_gamma_for_chordally_lipschitz_fields(
        n in 8usize..64,
        c in 0.0..1.0f64,
        angle in 0.0..(2.0 * PI),
        g1 in 0.05..0.95f64,
        g2 in 0.05..0.95f64,
    ) {
        // |F_i - F_j| = c |e^{i theta_i} - e^{i theta_j}|
        let rot = Mat2::new(angle.cos(), -angle.sin(), angle.sin(), angle.cos());
        let f = VectorFieldOnCurve::new(
            (0..n)
                .map(|i| {
                    let t = param(i, n);
                    rot * Point::new(t.cos(), t.sin()) * c + Point::new(0.3, -0.1)
                })
                .collect(),
        );
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        prop_assert!(holder_seminorm(&f, hi) <= holder_seminorm(&f, lo) * (1.0 + 1e-12));
    }

    #[test]
    fn bilipschitz_of_identity_and_rigid_motions(
        c in common::curve(48),
        angle in 0.0..(2.0 * PI),
        dx in -3.0..3.0f64,
        dy in -3.0..3.0f64,
        other in common::curve(48),
    ) {
        prop_assert_eq!(bilipschitz_constant(&c, &c).unwrap(), 1.0);
        let (s, co) = angle.sin_cos();
        let motion = |p: Point| Point::new(co * p.x - s * p.y + dx, s * p.x + co * p.y + dy);
        let b = bilipschitz_constant(&other, &c).unwrap();
        let moved = bilipschitz_constant(
            &other.transformed(motion).unwrap(),
            &c.transformed(motion).unwrap(),
        )
        .unwrap();
        prop_assert!((moved - b).abs() < 1e-12 * b.max(1.0));
    }

    #[test]
    fn preset_area_matches_the_analytic_area(shape in common::preset(), half in 32usize..100) {
        let c = preset_shape(shape, 2 * half, 0.5).unwrap();
        prop_assert!((c.area() - shape.exact_area()).abs() < 1e-8);
    }
}

#[test]
fn derivative_of_band_limited_presets_is_exact() {
    for (shape, der) in [
        (
            Shape::Circle { radius: 1.5 },
            Box::new(|t: f64| Point::new(-1.5 * t.sin(), 1.5 * t.cos()))
                as Box<dyn Fn(f64) -> Point>,
        ),
        (
            Shape::Ellipse { a: 2.0, b: 0.7 },
            Box::new(|t: f64| Point::new(-2.0 * t.sin(), 0.7 * t.cos())),
        ),
    ] {
        for n in [16, 64, 128] {
            let c = preset_shape(shape, n, 0.5).unwrap();
            for (i, d) in c.derivative().values.iter().enumerate() {
                assert!((d - der(param(i, n))).norm() < 1e-10);
            }
        }
    }
}
