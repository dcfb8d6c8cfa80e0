//! Two evaluations of `grad v(x) tau(x)` at boundary points: directly from
//! the parameter derivative of the marker velocities, and as the area
//! integral `int_D grad k(x - y) (g(x) - g(y)) dy` with `g` the
//! divergence-free extension of `tau`.

use rayon::prelude::*;

use crate::curve::{holder_seminorm_ambient, Curve, VectorFieldOnCurve};
use crate::extension::{whitney_extend, WhitneyExtension, WhitneyOptions};
use crate::kernel::KernelSpec;
use crate::numeric::{GaussRule, KahanVec};
use crate::rays::{RayCaster, DEFAULT_OVERSAMPLE};
use crate::velocity::{sup_grad_velocity, tangential_derivative, SupGradOptions};
use crate::{Error, Point, Result};

/// `grad v(X) tau(X)` at every marker.
pub fn direct_tangential(curve: &Curve, spec: &KernelSpec) -> Result<VectorFieldOnCurve> {
    curve.tangent_normal()?;
    Ok(tangential_derivative(curve, spec))
}

/// Resolution of the polar area quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub angular_nodes: usize,
    pub gauss_order: usize,
    /// Ratio of consecutive panel lengths in the geometric grading.
    pub grading: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            angular_nodes: 512,
            gauss_order: 12,
            grading: 0.5,
        }
    }
}

impl QuadratureOptions {
    /// Doubles the angular and radial resolution.
    pub fn refined(self) -> Self {
        Self {
            angular_nodes: 2 * self.angular_nodes,
            gauss_order: 2 * self.gauss_order,
            grading: self.grading,
        }
    }
}

/// Area quadrature of `D` in polar coordinates around a center.
///
/// Rays from the center are cut exactly at the curve; along each inside
/// interval the Gauss panels are graded geometrically toward the center,
/// down to a small fraction of `layer`, and toward the far crossings, down to
/// `layer`, so that structure of the integrand at that scale near the curve
/// is resolved.
#[derive(Debug, Clone)]
pub struct PatchQuadrature {
    center: Point,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

fn graded_panels(a: f64, b: f64, from_center: bool, layer: f64, ratio: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut cuts = vec![a, b];
    // toward the far end
    let mut w = 0.5 * len;
    while w > layer {
        cuts.push(b - w);
        w *= ratio;
    }
    // toward the near end: the center, or a crossing
    let floor = if from_center { 1e-3 * layer } else { layer };
    let mut w = 0.5 * len;
    while w > floor {
        cuts.push(a + w);
        w *= ratio;
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * len);
    cuts.windows(2).map(|c| (c[0], c[1])).collect()
}

impl PatchQuadrature {
    /// Quadrature of `D` centered at `x`, which may be a marker.
    pub fn new(rays: &RayCaster, x: Point, layer: f64, opts: QuadratureOptions) -> Result<Self> {
        if opts.angular_nodes < 16 || opts.gauss_order == 0 {
            return Err(Error::param("quadrature", "too few nodes"));
        }
        if !(opts.grading > 0.0 && opts.grading < 1.0) {
            return Err(Error::param(
                "grading",
                format!("{} is not in (0, 1)", opts.grading),
            ));
        }
        let rule = GaussRule::new(opts.gauss_order);
        let on_marker = rays.marker_at(x);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let angles = rays.angular_rule(x, on_marker, opts.angular_nodes, opts.gauss_order);
        for (t, dtheta) in angles {
            let d = Point::new(t.cos(), t.sin());
            for (a, b) in rays.inside_intervals(x, d, on_marker) {
                for (lo, hi) in graded_panels(a, b, a == 0.0, layer, opts.grading) {
                    for (rho, w) in rule.on(lo, hi) {
                        nodes.push(x + d * rho);
                        weights.push(w * rho * dtheta);
                    }
                }
            }
        }
        Ok(Self {
            center: x,
            nodes,
            weights,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Sum of the weights, an approximation of `|D|`.
    pub fn total_weight(&self) -> f64 {
        let mut acc = crate::numeric::KahanSum::new();
        self.weights.iter().for_each(|&w| acc.add(w));
        acc.value()
    }
}

/// `int_D grad k(x - y) (g(x) - g(y)) dy` on a prepared quadrature
/// centered at `x`.
pub fn commutator_on(quad: &PatchQuadrature, spec: &KernelSpec, ext: &WhitneyExtension) -> Point {
    let x = quad.center();
    let gx = ext.field(x);
    let mut acc = KahanVec::default();
    for (y, w) in quad.nodes() {
        let (_, jac) = spec.value_and_grad(x - y);
        acc.add(jac * (gx - ext.field(y)) * w);
    }
    acc.value()
}

/// The commutator integral at marker `index`.
pub fn commutator_integral(
    curve: &Curve,
    spec: &KernelSpec,
    ext: &WhitneyExtension,
    index: usize,
    opts: QuadratureOptions,
) -> Result<Point> {
    if index >= curve.n_markers() {
        return Err(Error::param("marker", format!("{index} out of range")));
    }
    let rays = RayCaster::new(curve, DEFAULT_OVERSAMPLE);
    let quad = PatchQuadrature::new(&rays, curve.points()[index], layer(curve), opts)?;
    Ok(commutator_on(&quad, spec, ext))
}

fn layer(curve: &Curve) -> f64 {
    curve.min_gap() / 8.0
}

/// Settings of [`lemma3_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma3Options {
    /// Check every `stride`-th marker.
    pub stride: usize,
    pub tolerance: f64,
    pub quadrature: QuadratureOptions,
    pub whitney: WhitneyOptions,
}

impl Default for Lemma3Options {
    fn default() -> Self {
        Self {
            stride: 4,
            tolerance: 5e-2,
            quadrature: QuadratureOptions::default(),
            whitney: WhitneyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerComparison {
    pub index: usize,
    pub direct: Point,
    pub commutator: Point,
    /// `|direct - commutator| / (|direct| + 1e-12)`.
    pub discrepancy: f64,
    /// `|sum of quadrature weights - |D|| / |D|`.
    pub area_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Report {
    pub samples: Vec<MarkerComparison>,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Ambient Holder seminorm of the commutator side over the sampled markers.
    pub commutator_holder: f64,
    pub tangent_holder: f64,
    pub sup_grad_v: f64,
    /// `commutator_holder / ((1 + sup_grad_v) tangent_holder)`.
    pub fitted_constant: f64,
}

/// Compares both sides of the identity at every `stride`-th marker using the
/// unit tangent field of the curve.
pub fn lemma3_check(curve: &Curve, spec: &KernelSpec, opts: Lemma3Options) -> Result<Lemma3Report> {
    if opts.stride == 0 {
        return Err(Error::param("stride", "must be positive"));
    }
    let (tangent, _) = curve.tangent_normal()?;
    lemma3_check_field(curve, spec, &tangent, opts)
}

/// As [`lemma3_check`] with a caller-supplied tangent field; a non-tangent
/// field is rejected by the extension stage.
pub fn lemma3_check_field(
    curve: &Curve,
    spec: &KernelSpec,
    tangent: &VectorFieldOnCurve,
    opts: Lemma3Options,
) -> Result<Lemma3Report> {
    let ext = whitney_extend(curve, tangent, opts.whitney)?;
    let velocity_tangential = direct_tangential(curve, spec)?;
    let (unit, _) = curve.tangent_normal()?;
    let rays = RayCaster::new(curve, DEFAULT_OVERSAMPLE);
    let area = curve.area();
    let h = layer(curve);

    let indices: Vec<usize> = (0..curve.n_markers()).step_by(opts.stride).collect();
    let samples = indices
        .par_iter()
        .map(|&i| {
            let quad = PatchQuadrature::new(&rays, curve.points()[i], h, opts.quadrature)?;
            let commutator = commutator_on(&quad, spec, &ext);
            // grad v(x) applied to the supplied field, which is parallel to the unit tangent
            let scale = tangent.values[i].dot(&unit.values[i]);
            let direct = velocity_tangential.values[i] * scale;
            Ok(MarkerComparison {
                index: i,
                direct,
                commutator,
                discrepancy: (direct - commutator).norm() / (direct.norm() + 1e-12),
                area_error: (quad.total_weight() - area).abs() / area.abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max_discrepancy = samples.iter().map(|s| s.discrepancy).fold(0.0, f64::max);
    let gamma = curve.gamma();
    let pts: Vec<Point> = samples.iter().map(|s| curve.points()[s.index]).collect();
    let comm: Vec<Point> = samples.iter().map(|s| s.commutator).collect();
    let commutator_holder = holder_seminorm_ambient(&pts, &comm, gamma);
    let tangent_holder = holder_seminorm_ambient(curve.points(), &tangent.values, gamma);
    let sup_grad_v = sup_grad_velocity(curve, spec, SupGradOptions::default())?.value;
    let denom = (1.0 + sup_grad_v) * tangent_holder;
    let fitted_constant = if denom > 0.0 {
        commutator_holder / denom
    } else {
        0.0
    };
    Ok(Lemma3Report {
        passed: max_discrepancy < opts.tolerance,
        samples,
        max_discrepancy,
        tolerance: opts.tolerance,
        commutator_holder,
        tangent_holder,
        sup_grad_v,
        fitted_constant,
    })
}
