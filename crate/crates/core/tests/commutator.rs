mod common;

use patchflow::commutator::{
    commutator_integral, direct_tangential, lemma3_check, Lemma3Options, QuadratureOptions,
};
use patchflow::curve::{preset_shape, Shape};
use patchflow::extension::{whitney_extend, WhitneyOptions};
use patchflow::kernel::KernelSpec;
use proptest::prelude::*;

fn coarse() -> QuadratureOptions {
    QuadratureOptions {
        angular_nodes: 256,
        gauss_order: 6,
        ..QuadratureOptions::default()
    }
}

#[test]
fn refinement_never_worsens_the_discrepancy_by_more_than_ten_percent() {
    let mixed = KernelSpec::linear_combination(vec![
        (0.5, KernelSpec::biot_savart()),
        (0.5, KernelSpec::grad_n()),
    ])
    .unwrap();
    for shape in [
        Shape::Ellipse { a: 2.0, b: 1.0 },
        Shape::PerturbedCircle {
            epsilon: 0.05,
            m: 3,
        },
    ] {
        let c = preset_shape(shape, 128, 0.5).unwrap();
        for spec in [KernelSpec::biot_savart(), mixed.clone()] {
            let run = |quadrature| {
                lemma3_check(
                    &c,
                    &spec,
                    Lemma3Options {
                        stride: 8,
                        quadrature,
                        ..Lemma3Options::default()
                    },
                )
                .unwrap()
                .max_discrepancy
            };
            let lo = run(coarse());
            let hi = run(coarse().refined());
            assert!(hi <= 1.1 * lo, "{shape:?}: {lo} -> {hi}");
        }
    }
}

#[test]
fn commutator_is_linear_in_the_tangent_field() {
    let c = preset_shape(Shape::PerturbedCircle { epsilon: 0.1, m: 3 }, 64, 0.5).unwrap();
    let (tau, _) = c.tangent_normal().unwrap();
    let spec = KernelSpec::biot_savart();
    let one = whitney_extend(&c, &tau, WhitneyOptions::default()).unwrap();
    let two = whitney_extend(&c, &tau.scaled(2.0), WhitneyOptions::default()).unwrap();
    for i in [0, 13, 40] {
        let a = commutator_integral(&c, &spec, &one, i, coarse()).unwrap();
        let b = commutator_integral(&c, &spec, &two, i, coarse()).unwrap();
        assert!((b - a * 2.0).norm() < 1e-10 * a.norm().max(1.0), "{a} {b}");
    }
}

fn worst_relative(n: usize, k: &KernelSpec) -> f64 {
    let c = preset_shape(Shape::Ellipse { a: 2.0, b: 1.0 }, n, 0.5).unwrap();
    let scale = direct_tangential(&c, k).unwrap().max_norm();
    let r = lemma3_check(
        &c,
        k,
        Lemma3Options {
            stride: n / 8,
            ..Lemma3Options::default()
        },
    )
    .unwrap();
    r.samples
        .iter()
        .map(|s| (s.direct - s.commutator).norm() / scale)
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    // Relative to the largest tangential derivative on the curve, since a
    // general kernel can make it nearly vanish at some markers. Higher
    // harmonics raise the discretization error, so the check is that it
    // shrinks with the marker count.
    #[test]
    fn identity_converges_for_fourier_kernels(k in common::fourier_kernel()) {
        let coarse = worst_relative(128, &k);
        let fine = worst_relative(256, &k);
        prop_assert!(coarse < 0.25, "{}", coarse);
        prop_assert!(fine < 0.9 * coarse, "{} -> {}", coarse, fine);
    }
}
