mod common;

use patchflow::curve::{preset_shape, Shape};
use patchflow::evolve::{
    area_rate_check, gronwall_monitor, run, step, GuardCode, RunConfig, SimState,
};
use patchflow::kernel::KernelSpec;
use proptest::prelude::*;

fn max_gap(a: &patchflow::curve::Curve, b: &patchflow::curve::Curve) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reversed_step_returns_to_the_start(c in common::curve(64), spec in common::any_kernel()) {
        let dt = 1e-3;
        let start = SimState::new(c.clone(), spec);
        let there = step(&start, dt).unwrap();
        let back = step(&there.reversed().unwrap(), dt).unwrap();
        prop_assert!(max_gap(back.curve(), &c) < 1e-9, "{}", max_gap(back.curve(), &c));
    }

    #[test]
    fn euler_kernel_conserves_area(c in common::curve(64)) {
        let a0 = c.area();
        let cfg = RunConfig { dt: 1e-2, t_final: 0.1, ..RunConfig::default() };
        let out = run(SimState::new(c, KernelSpec::biot_savart()), &cfg).unwrap();
        prop_assert!(out.halt.is_none());
        for r in &out.records {
            prop_assert!((r.area - a0).abs() < 1e-6 * a0, "{} vs {}", r.area, a0);
        }
    }
}

#[test]
fn disc_reversal_is_exact_to_roundoff() {
    let c = preset_shape(Shape::Circle { radius: 1.0 }, 128, 0.5).unwrap();
    let there = step(&SimState::new(c.clone(), KernelSpec::biot_savart()), 1e-2).unwrap();
    let back = step(&there.reversed().unwrap(), 1e-2).unwrap();
    assert!(max_gap(back.curve(), &c) < 1e-10);
}

#[test]
fn b_floor_halts_a_deforming_patch() {
    let c = preset_shape(Shape::PerturbedCircle { epsilon: 0.2, m: 3 }, 64, 0.5).unwrap();
    let cfg = RunConfig {
        dt: 1e-2,
        t_final: 5.0,
        b_floor: 0.999,
        ..RunConfig::default()
    };
    let out = run(SimState::new(c, KernelSpec::biot_savart()), &cfg).unwrap();
    let halt = out.halt.expect("run should halt");
    assert_eq!(halt.code, GuardCode::BilipschitzCollapse);
    assert!(halt.code.is_healthy_halt());
    assert!(out.records.iter().all(|r| r.b >= 0.999 * out.records[0].b));
}

#[test]
fn cfl_guard_refuses_an_oversized_step() {
    let c = preset_shape(Shape::Circle { radius: 1.0 }, 64, 0.5).unwrap();
    let cfg = RunConfig {
        dt: 0.5,
        t_final: 1.0,
        ..RunConfig::default()
    };
    let out = run(SimState::new(c, KernelSpec::biot_savart()), &cfg).unwrap();
    assert_eq!(out.halt.unwrap().code, GuardCode::Cfl);
    assert_eq!(out.final_state.step_count(), 0);
}

#[test]
fn grad_n_area_rate_matches_the_flux() {
    let c = preset_shape(Shape::Ellipse { a: 1.5, b: 1.0 }, 128, 0.5).unwrap();
    let r = area_rate_check(&SimState::new(c, KernelSpec::grad_n()), None).unwrap();
    assert!(r.relative < 1e-5, "{r:?}");
}

#[test]
fn gronwall_monitor_bounds_every_record() {
    let c = preset_shape(
        Shape::PerturbedCircle {
            epsilon: 0.05,
            m: 3,
        },
        64,
        0.5,
    )
    .unwrap();
    let cfg = RunConfig {
        dt: 2e-2,
        t_final: 0.4,
        ..RunConfig::default()
    };
    let out = run(SimState::new(c, KernelSpec::biot_savart()), &cfg).unwrap();
    let g = gronwall_monitor(&out.records).unwrap();
    assert!(!g.infinite);
    assert!(g.min_margin() >= -1e-12);
    assert!(g.margins.iter().any(|m| m.abs() < 1e-9));
}
