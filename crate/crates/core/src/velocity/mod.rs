//! Boundary-integral evaluation of `v = chi_D * k` and its gradient.
//!
//! Using `k = d_1(x_1 k) + d_2(x_2 k)` and `grad chi_D = -n dsigma`, the
//! velocity of a patch reduces to the contour integral
//! `v(z) = oint k(z - w) <-i(z - w), dw>`, discretized here by the trapezoid
//! rule on the uniform parameter grid.

mod tstar;

use std::f64::consts::PI;

use rayon::prelude::*;

pub use tstar::{
    fit_log_bound, log_bound_rhs, tstar, EvenKernel, LogBoundFit, TruncationSweep, TstarConfig,
    TstarEvaluator,
};

use crate::curve::{Curve, VectorFieldOnCurve};
use crate::kernel::KernelSpec;
use crate::numeric::{operator_norm, spectral_derivative, KahanMat, KahanSum, KahanVec};
use crate::{rot_cw, Error, Mat2, Point, Result};

/// Default minimum distance from the boundary for off-curve gradients,
/// as a fraction of the curve diameter.
pub const DEFAULT_GEOM_EPS: f64 = 1e-3;

/// Trapezoid evaluation of the contour integral at `z`, skipping marker
/// `skip` (the self-term, whose integrand tends to 0 along a smooth curve).
fn contour_velocity(
    points: &[Point],
    dpoints: &[Point],
    spec: &KernelSpec,
    z: Point,
    skip: Option<usize>,
) -> Point {
    let n = points.len();
    let mut acc = KahanVec::default();
    for j in 0..n {
        if Some(j) == skip {
            continue;
        }
        let d = z - points[j];
        acc.add(spec.value(d) * rot_cw(d).dot(&dpoints[j]));
    }
    acc.value() * (2.0 * PI / n as f64)
}

fn coincident_marker(points: &[Point], z: Point) -> Option<usize> {
    let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    points.iter().position(|p| (p - z).norm() <= 1e-14 * scale)
}

/// `v(z)` for any `z` in the plane. If `z` is a marker its self-term is 0.
///
/// Accuracy is spectral for `z` at markers or away from the curve and
/// degrades smoothly as `z` approaches a boundary point between markers.
pub fn boundary_velocity(curve: &Curve, spec: &KernelSpec, z: Point) -> Point {
    let d = spectral_derivative(curve.points());
    let skip = coincident_marker(curve.points(), z);
    contour_velocity(curve.points(), &d, spec, z, skip)
}

/// `F(X)` at every marker: the right-hand side of the contour dynamics equation.
pub fn velocity_on_markers(curve: &Curve, spec: &KernelSpec) -> VectorFieldOnCurve {
    let n = curve.n_markers();
    if spec.is_zero() {
        return VectorFieldOnCurve::zeros(n);
    }
    let pts = curve.points();
    let d = spectral_derivative(pts);
    let values = (0..n)
        .into_par_iter()
        .map(|i| contour_velocity(pts, &d, spec, pts[i], Some(i)))
        .collect();
    VectorFieldOnCurve::new(values)
}

/// Fails with [`Error::Runaway`] if any speed exceeds `bound`.
pub fn check_runaway(field: &VectorFieldOnCurve, bound: f64) -> Result<()> {
    let speed = field.max_norm();
    if !(speed <= bound) {
        return Err(Error::Runaway { speed, bound });
    }
    Ok(())
}

/// `oint <v, n> dsigma`, the rate of change of the enclosed area.
pub fn normal_flux(curve: &Curve, field: &VectorFieldOnCurve) -> f64 {
    let d = spectral_derivative(curve.points());
    let n = curve.n_markers();
    let mut acc = KahanSum::new();
    for (v, dx) in field.values.iter().zip(&d) {
        acc.add(v.dot(&rot_cw(*dx)));
    }
    acc.value() * 2.0 * PI / n as f64
}

/// `grad v(z)` off the curve from `d_j v_i(z) = -oint k_i(z - w) n_j(w) dsigma(w)`.
///
/// `min_distance` defaults to [`DEFAULT_GEOM_EPS`] times the diameter.
pub fn grad_velocity_offcurve(
    curve: &Curve,
    spec: &KernelSpec,
    z: Point,
    min_distance: Option<f64>,
) -> Result<Mat2> {
    let min = min_distance.unwrap_or_else(|| DEFAULT_GEOM_EPS * curve.diameter());
    let distance = curve.distance_to(z);
    if !(distance > min) {
        return Err(Error::TooCloseToBoundary { distance, min });
    }
    let d = spectral_derivative(curve.points());
    Ok(grad_at(curve.points(), &d, spec, z))
}

fn grad_at(points: &[Point], dpoints: &[Point], spec: &KernelSpec, z: Point) -> Mat2 {
    let n = points.len();
    let mut acc = KahanMat::default();
    for (w, dw) in points.iter().zip(dpoints) {
        let k = spec.value(z - w);
        acc.add(&(k * rot_cw(*dw).transpose()));
    }
    -acc.value() * (2.0 * PI / n as f64)
}

/// Probe layout for [`sup_grad_velocity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGradOptions {
    /// Probe offset from the curve in units of the mean marker spacing.
    pub probe_spacings: f64,
    /// Include the exact on-curve tangential estimator.
    pub tangential: bool,
}

impl Default for SupGradOptions {
    fn default() -> Self {
        Self {
            probe_spacings: 3.0,
            tangential: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGradEstimate {
    pub value: f64,
    pub interior: f64,
    pub exterior: f64,
    pub tangential: f64,
    pub probes_used: usize,
}

/// Estimate of `||grad v||_inf`: the largest operator norm of the Jacobian over
/// probes `X_i -+ eps n_i` on both sides of the curve, together with
/// `|grad v(X) tau|` on the curve obtained exactly from `d/dtheta v(X(theta))`.
///
/// Probes that land closer than `eps/2` to another part of the curve are
/// skipped. This is an estimator, not a bound on the true supremum.
pub fn sup_grad_velocity(
    curve: &Curve,
    spec: &KernelSpec,
    opts: SupGradOptions,
) -> Result<SupGradEstimate> {
    let n = curve.n_markers();
    let pts = curve.points();
    let d = spectral_derivative(pts);
    let (_, normal) = curve.tangent_normal()?;
    let eps = opts.probe_spacings * curve.perimeter() / n as f64;

    let per_marker: Vec<(f64, f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = (0.0f64, 0.0f64, 0usize);
            for (side, sign) in [(0, -1.0), (1, 1.0)] {
                let z = pts[i] + normal.values[i] * (sign * eps);
                if curve.distance_to(z) < 0.5 * eps {
                    continue;
                }
                let norm = operator_norm(&grad_at(pts, &d, spec, z));
                if side == 0 {
                    out.0 = out.0.max(norm);
                } else {
                    out.1 = out.1.max(norm);
                }
                out.2 += 1;
            }
            out
        })
        .collect();
    let interior = per_marker.iter().map(|p| p.0).fold(0.0, f64::max);
    let exterior = per_marker.iter().map(|p| p.1).fold(0.0, f64::max);
    let probes_used = per_marker.iter().map(|p| p.2).sum();

    let tangential = if opts.tangential {
        tangential_derivative(curve, spec)
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(SupGradEstimate {
        value: interior.max(exterior).max(tangential),
        interior,
        exterior,
        tangential,
        probes_used,
    })
}

/// `grad v(X) tau` at the markers, from the spectral parameter derivative of
/// the marker velocities divided by `|X'|`.
pub(crate) fn tangential_derivative(curve: &Curve, spec: &KernelSpec) -> VectorFieldOnCurve {
    let v = velocity_on_markers(curve, spec);
    let dv = spectral_derivative(&v.values);
    let dx = spectral_derivative(curve.points());
    VectorFieldOnCurve::new(dv.iter().zip(&dx).map(|(a, b)| a / b.norm()).collect())
}
