//! Contour dynamics for planar patches transported by `v = chi_D * k`, where `k`
//! is an odd kernel homogeneous of degree -1, together with numerical checks of
//! the quantities that control boundary regularity: Holder seminorms of the
//! boundary parametrization, bilipschitz constants, the jet inequality for
//! normal fields, a divergence-free Whitney extension of the tangent field, the
//! commutator form of `grad v (tau)` and the logarithmic bound on the maximal
//! truncated singular integral.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod commutator;
pub mod curve;
pub mod error;
pub mod evolve;
pub mod extension;
pub mod io;
pub mod kernel;
pub mod numeric;
pub mod rays;
pub mod velocity;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Point = nalgebra::Vector2<f64>;
/// A 2x2 real matrix, row `i` / column `j` holding `d_j f_i` for Jacobians.
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Rotation by -90 degrees: multiplication of `x + i y` by `-i`.
#[inline]
pub fn rot_cw(p: Point) -> Point {
    Point::new(p.y, -p.x)
}

/// Rotation by +90 degrees: multiplication by `i`.
#[inline]
pub fn rot_ccw(p: Point) -> Point {
    Point::new(-p.y, p.x)
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}
