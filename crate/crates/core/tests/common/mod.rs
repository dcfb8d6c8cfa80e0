#![allow(dead_code)]

use patchflow::curve::{preset_shape, Curve, Shape};
use patchflow::kernel::{odd_harmonic_terms, KernelSpec};
use proptest::prelude::*;

/// Fourier kernels with harmonics 1, 3, 5 and coefficients in [-1, 1].
pub fn fourier_kernel() -> impl Strategy<Value = KernelSpec> {
    prop::collection::vec(-1.0..1.0f64, 12)
        .prop_filter("nonzero", |c| c.iter().any(|x| x.abs() > 0.1))
        .prop_map(|c| {
            KernelSpec::angular_fourier(
                odd_harmonic_terms(&c[0..3], &c[3..6]),
                odd_harmonic_terms(&c[6..9], &c[9..12]),
            )
            .unwrap()
        })
}

pub fn any_kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::biot_savart()),
        Just(KernelSpec::grad_n()),
        fourier_kernel(),
    ]
}

pub fn preset() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.5..2.0f64).prop_map(|radius| Shape::Circle { radius }),
        (1.0..2.5f64, 0.5..1.0f64).prop_map(|(a, b)| Shape::Ellipse { a, b }),
        (-0.3..0.3f64, 1u32..7).prop_map(|(epsilon, m)| Shape::PerturbedCircle { epsilon, m }),
    ]
}

pub fn curve(n: usize) -> impl Strategy<Value = Curve> {
    preset().prop_map(move |s| preset_shape(s, n, 0.5).unwrap())
}
