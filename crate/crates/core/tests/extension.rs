mod common;

use std::f64::consts::PI;

use patchflow::curve::{holder_seminorm_ambient, preset_shape, Shape};
use patchflow::extension::{
    divergence_free_field, eval_extension, jet_constant_verify, sampled_field_holder,
    whitney_extend, WhitneyOptions,
};
use patchflow::{Error, Point};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn extension_reproduces_the_jet_and_is_divergence_free(
        c in common::curve(64),
        probes in prop::collection::vec((0usize..64, -0.3..0.3f64), 32),
    ) {
        let (tau, normal) = c.tangent_normal().unwrap();
        let ext = whitney_extend(&c, &tau, WhitneyOptions::default()).unwrap();
        prop_assert!(ext.max_overlap() <= 16);
        for (i, p) in c.points().iter().enumerate() {
            let (phi, grad) = eval_extension(&ext, *p);
            let t = tau.values[i];
            prop_assert!(phi.abs() < 1e-10);
            prop_assert!((grad - Point::new(-t.y, t.x)).norm() < 1e-6);
            prop_assert!((divergence_free_field(&ext, *p) - t).norm() < 1e-6);
        }
        let h = 1e-7 * c.diameter();
        for (i, s) in probes {
            let x = c.points()[i] + normal.values[i] * s;
            let (_, grad) = eval_extension(&ext, x);
            let mut fd = Point::zeros();
            let mut div = 0.0;
            for j in 0..2 {
                let mut dx = Point::zeros();
                dx[j] = h;
                fd[j] = (eval_extension(&ext, x + dx).0 - eval_extension(&ext, x - dx).0) / (2.0 * h);
                div += (divergence_free_field(&ext, x + dx)[j] - divergence_free_field(&ext, x - dx)[j]) / (2.0 * h);
            }
            prop_assert!((fd - grad).norm() < 1e-5 * grad.norm().max(1.0));
            prop_assert!(div.abs() < 1e-5, "div {} at {}", div, x);
        }
    }

    #[test]
    fn jet_bound_holds_for_presets(c in common::curve(64), gamma in 0.05..0.95f64) {
        let (_, normal) = c.tangent_normal().unwrap();
        let v = jet_constant_verify(&c, &normal, gamma).unwrap();
        prop_assert!(v.ratio <= v.bound);
    }
}

#[test]
fn holder_ratio_is_stable_under_refinement() {
    let ratio = |n: usize| {
        let e = preset_shape(Shape::Ellipse { a: 2.0, b: 1.0 }, n, 0.5).unwrap();
        let (tau, _) = e.tangent_normal().unwrap();
        let ext = whitney_extend(&e, &tau, WhitneyOptions::default()).unwrap();
        let probes: Vec<Point> = (0..120)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / 120.0;
                let s = 0.7 + 0.15 * (k % 5) as f64;
                Point::new(2.0 * s * t.cos(), s * t.sin())
            })
            .collect();
        sampled_field_holder(&ext, &probes, 0.5)
            / holder_seminorm_ambient(e.points(), &tau.values, 0.5)
    };
    let (coarse, fine) = (ratio(64), ratio(128));
    assert!((coarse - fine).abs() < 0.1 * fine, "{coarse} vs {fine}");
}

#[test]
fn normal_field_is_not_extended() {
    let c = preset_shape(Shape::Ellipse { a: 1.5, b: 1.0 }, 32, 0.5).unwrap();
    let (_, normal) = c.tangent_normal().unwrap();
    assert!(matches!(
        whitney_extend(&c, &normal, WhitneyOptions::default()),
        Err(Error::NotTangent { .. })
    ));
}
