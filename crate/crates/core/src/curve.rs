//! Closed curves sampled at uniform parameter values, with spectral
//! differentiation and the geometric diagnostics used by the evolution
//! monitors (Holder seminorms, bilipschitz constant, area).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numeric::{fourier_coefficients, spectral_derivative, wavenumber, GaussRule, KahanSum};
use crate::{cross, rot_cw, Error, Point, Result};

/// Smallest admissible marker count.
pub const MIN_MARKERS: usize = 16;

/// A closed curve `X(theta_i)` sampled at `theta_i = 2 pi i / N`.
///
/// Markers are stored in parameter order; positive orientation is
/// counter-clockwise. `gamma` is the Holder exponent carried for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
    gamma: f64,
}

/// Values attached to the markers of a [`Curve`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldOnCurve {
    pub values: Vec<Point>,
}

impl VectorFieldOnCurve {
    pub fn new(values: Vec<Point>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![Point::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Analytic preset shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Polar curve `r(theta) = 1 + epsilon cos(m theta)`.
    PerturbedCircle {
        epsilon: f64,
        m: u32,
    },
}

impl Shape {
    /// Analytic position at parameter `theta`.
    pub fn position(&self, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        match *self {
            Shape::Circle { radius } => Point::new(radius * c, radius * s),
            Shape::Ellipse { a, b } => Point::new(a * c, b * s),
            Shape::PerturbedCircle { epsilon, m } => {
                let r = 1.0 + epsilon * (m as f64 * theta).cos();
                Point::new(r * c, r * s)
            }
        }
    }

    /// Analytic area enclosed by the shape.
    pub fn exact_area(&self) -> f64 {
        match *self {
            Shape::Circle { radius } => PI * radius * radius,
            Shape::Ellipse { a, b } => PI * a * b,
            Shape::PerturbedCircle { epsilon, .. } => PI * (1.0 + 0.5 * epsilon * epsilon),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Shape::Circle { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param(
                        "radius",
                        format!("must be positive, got {radius}"),
                    ));
                }
            }
            Shape::Ellipse { a, b } => {
                if !(b > 0.0 && a >= b && a.is_finite()) {
                    return Err(Error::param(
                        "a,b",
                        format!("need a >= b > 0, got a={a}, b={b}"),
                    ));
                }
            }
            Shape::PerturbedCircle { epsilon, m } => {
                if m == 0 {
                    return Err(Error::param("m", "harmonic must be >= 1"));
                }
                if !(epsilon.abs() < 1.0) {
                    return Err(Error::param(
                        "epsilon",
                        format!("|epsilon| must be < 1 for a positive radius, got {epsilon}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sample a preset shape at `n` uniform parameters.
pub fn preset_shape(shape: Shape, n: usize, gamma: f64) -> Result<Curve> {
    shape.validate()?;
    check_marker_count(n)?;
    let points = (0..n).map(|i| shape.position(param(i, n))).collect();
    Curve::new(points, gamma)
}

/// Parameter value of marker `i` out of `n`.
#[inline]
pub fn param(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

fn check_marker_count(n: usize) -> Result<()> {
    if n < MIN_MARKERS || !n.is_multiple_of(2) {
        return Err(Error::MarkerCount(n));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(
            "gamma",
            format!("must lie in (0,1), got {gamma}"),
        ));
    }
    Ok(())
}

impl Curve {
    /// Build a curve, checking the marker count, `gamma`, distinct markers
    /// and that the marker polygon has no self-intersections.
    pub fn new(points: Vec<Point>, gamma: f64) -> Result<Self> {
        let curve = Self::from_raw(points, gamma)?;
        curve.check_simple()?;
        Ok(curve)
    }

    /// Build a curve checking only the marker count and `gamma`. Used for
    /// intermediate Runge-Kutta stages, where simplicity is checked once per step.
    pub fn from_raw(points: Vec<Point>, gamma: f64) -> Result<Self> {
        check_marker_count(points.len())?;
        check_gamma(gamma)?;
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::param("points", "non-finite marker position"));
        }
        Ok(Self { points, gamma })
    }

    pub fn n_markers(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn params(&self) -> Vec<f64> {
        let n = self.n_markers();
        (0..n).map(|i| param(i, n)).collect()
    }

    /// Rigid map `p -> R p + shift` (also used for scaling via `scale`).
    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        Curve::new(self.points.iter().map(|&p| f(p)).collect(), self.gamma)
    }

    /// `dX/dtheta` at the markers by trigonometric differentiation.
    pub fn derivative(&self) -> VectorFieldOnCurve {
        VectorFieldOnCurve::new(spectral_derivative(&self.points))
    }

    /// Unit tangent and outward unit normal (tangent rotated by -90 degrees).
    pub fn tangent_normal(&self) -> Result<(VectorFieldOnCurve, VectorFieldOnCurve)> {
        let d = self.derivative();
        let mut tangent = Vec::with_capacity(d.len());
        for (index, v) in d.values.iter().enumerate() {
            let speed = v.norm();
            if speed < 1e-12 {
                return Err(Error::DegenerateParametrization { index, speed });
            }
            tangent.push(v / speed);
        }
        let normal = tangent.iter().map(|&t| rot_cw(t)).collect();
        Ok((
            VectorFieldOnCurve::new(tangent),
            VectorFieldOnCurve::new(normal),
        ))
    }

    /// Signed area `(1/2) oint x dy - y dx` of the trigonometric interpolant;
    /// positive for counter-clockwise curves. The trapezoid rule is exact
    /// here because the integrand is band-limited below `N`.
    pub fn area(&self) -> f64 {
        let d = spectral_derivative(&self.points);
        let mut acc = KahanSum::new();
        for (p, dp) in self.points.iter().zip(&d) {
            acc.add(cross(*p, *dp));
        }
        PI * acc.value() / self.n_markers() as f64
    }

    pub fn centroid(&self) -> Point {
        let n = self.n_markers() as f64;
        self.points.iter().sum::<Point>() / n
    }

    /// Largest marker-to-marker distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max((p - q).norm());
            }
        }
        d
    }

    /// Smallest distance between consecutive markers.
    pub fn min_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Polygon perimeter of the markers.
    pub fn perimeter(&self) -> f64 {
        self.gaps().into_iter().sum()
    }

    pub fn gaps(&self) -> Vec<f64> {
        let n = self.n_markers();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .collect()
    }

    /// Euclidean distance from `z` to the marker polygon.
    pub fn distance_to(&self, z: Point) -> f64 {
        let n = self.n_markers();
        (0..n)
            .map(|i| segment_distance(z, self.points[i], self.points[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that markers are pairwise distinct and that no two
    /// non-adjacent polygon edges intersect.
    pub fn check_simple(&self) -> Result<()> {
        let n = self.n_markers();
        let scale = self
            .points
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let pts = &self.points;
        for i in 0..n {
            for j in i + 1..n {
                if (pts[i] - pts[j]).norm() <= 1e-14 * scale {
                    return Err(Error::NotSimple(format!("markers {i} and {j} coincide")));
                }
            }
        }
        let boxes: Vec<(Point, Point)> = (0..n)
            .map(|i| {
                let a = pts[i];
                let b = pts[(i + 1) % n];
                (a.inf(&b), a.sup(&b))
            })
            .collect();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (lo1, hi1) = boxes[i];
                let (lo2, hi2) = boxes[j];
                if lo1.x > hi2.x || lo2.x > hi1.x || lo1.y > hi2.y || lo2.y > hi1.y {
                    continue;
                }
                if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                    return Err(Error::NotSimple(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Trigonometric interpolant through the markers.
    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(&self.points)
    }
}

fn segment_distance(z: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((z - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (z - (a + ab * t)).norm()
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Chordal distance `|e^{i a} - e^{i b}|` on the parameter circle.
#[inline]
pub fn chordal_distance(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a - b)).sin().abs()
}

/// Discrete Holder seminorm over marker pairs with the chordal distance on
/// the parameter circle:
/// `sup_{i != j} |F_i - F_j| / |e^{i theta_i} - e^{i theta_j}|^gamma`.
///
/// This is a lower bound for the continuum seminorm of the underlying field.
pub fn holder_seminorm(field: &VectorFieldOnCurve, gamma: f64) -> f64 {
    let n = field.len();
    let vals = &field.values;
    let mut best: f64 = 0.0;
    // chordal distance depends only on |i - j|
    let dist_pow: Vec<f64> = (0..n)
        .map(|k| chordal_distance(param(k, n), 0.0).powf(gamma))
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            let r = (vals[i] - vals[j]).norm() / dist_pow[j - i];
            best = best.max(r);
        }
    }
    best
}

/// Holder seminorm with the ambient distance between carrier points,
/// `sup_{x != y} |F(x) - F(y)| / |x - y|^gamma` over markers.
pub fn holder_seminorm_ambient(points: &[Point], values: &[Point], gamma: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d > 0.0 {
                best = best.max((values[i] - values[j]).norm() / d.powf(gamma));
            }
        }
    }
    best
}

/// `b = min_{i != j} |X_i - X_j| / |alpha_i - alpha_j|`, with `alpha` the
/// reference markers. Returns 0 when two current markers coincide.
pub fn bilipschitz_constant(current: &Curve, reference: &Curve) -> Result<f64> {
    let n = current.n_markers();
    if reference.n_markers() != n {
        return Err(Error::LengthMismatch {
            expected: reference.n_markers(),
            got: n,
        });
    }
    let x = current.points();
    let a = reference.points();
    let mut b = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let da = (a[i] - a[j]).norm();
            if da == 0.0 {
                return Err(Error::NotSimple(format!(
                    "reference markers {i} and {j} coincide"
                )));
            }
            let dx = (x[i] - x[j]).norm();
            if dx == 0.0 {
                return Ok(0.0);
            }
            b = b.min(dx / da);
        }
    }
    Ok(b)
}

/// The trigonometric interpolant of a closed curve, evaluable at any parameter.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(points: &[Point]) -> Self {
        Self {
            coeffs: fourier_coefficients(points),
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// Position and parameter derivative at `theta`.
    pub fn eval(&self, theta: f64) -> (Point, Point) {
        let n = self.coeffs.len();
        let half = n / 2;
        let w = Complex64::new(theta.cos(), theta.sin());
        let mut pos = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for k in 0..=half {
            if k == half && n.is_multiple_of(2) {
                let c = self.coeffs[half];
                pos += c * p.re;
                der += c * (-(half as f64) * p.im);
                break;
            }
            let c_pos = self.coeffs[k];
            pos += c_pos * p;
            der += c_pos * p * Complex64::new(0.0, k as f64);
            if k > 0 {
                let c_neg = self.coeffs[n - k];
                let pc = p.conj();
                pos += c_neg * pc;
                der += c_neg * pc * Complex64::new(0.0, -(k as f64));
            }
            p *= w;
        }
        debug_assert_eq!(wavenumber(n - 1, n), -1);
        (Point::new(pos.re, pos.im), Point::new(der.re, der.im))
    }

    pub fn position(&self, theta: f64) -> Point {
        self.eval(theta).0
    }

    /// `X(theta + s) - X(theta)` without the cancellation of a plain
    /// difference, using `e^{iks} - 1` built up from `2i sin(s/2) e^{is/2}`.
    pub fn chord(&self, theta: f64, s: f64) -> Point {
        let n = self.coeffs.len();
        let half = n / 2;
        let w = Complex64::new(theta.cos(), theta.sin());
        let e1 = Complex64::new(s.cos(), s.sin());
        let d1 = Complex64::new(0.0, 2.0 * (0.5 * s).sin())
            * Complex64::new((0.5 * s).cos(), (0.5 * s).sin());
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = w;
        let mut d = d1;
        for k in 1..=half {
            let pd = p * d;
            if k == half && n.is_multiple_of(2) {
                acc += self.coeffs[half] * pd.re;
                break;
            }
            let pdc = p.conj() * d.conj();
            acc += self.coeffs[k] * pd + self.coeffs[n - k] * pdc;
            p *= w;
            d = d * e1 + d1;
        }
        Point::new(acc.re, acc.im)
    }
}

/// Redistribute markers uniformly in arclength.
///
/// The curve is interpolated trigonometrically, its arclength function is
/// integrated with panel Gauss-Legendre and inverted by Newton iteration.
/// The first new marker coincides with the old marker 0.
pub fn arc_resample(curve: &Curve, n_new: usize) -> Result<Curve> {
    check_marker_count(n_new)?;
    let interp = curve.interpolant();
    let n = curve.n_markers();
    let rule = GaussRule::new(10);
    let speed = |t: f64| interp.eval(t).1.norm();
    let panel = 2.0 * PI / n as f64;
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = KahanSum::new();
    cumulative.push(0.0);
    for p in 0..n {
        let a = p as f64 * panel;
        acc.add(rule.integrate(a, a + panel, speed));
        cumulative.push(acc.value());
    }
    let total = cumulative[n];
    let mut points = Vec::with_capacity(n_new);
    for k in 0..n_new {
        let target = total * k as f64 / n_new as f64;
        let p = match cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i - 1,
        };
        let a = p as f64 * panel;
        let local = target - cumulative[p];
        // Newton on s(t) - local = 0 inside the panel
        let mut t = a + panel * (local / (cumulative[p + 1] - cumulative[p])).clamp(0.0, 1.0);
        for _ in 0..50 {
            let s = if t > a {
                rule.integrate(a, t, speed)
            } else {
                0.0
            };
            let ds = speed(t);
            let step = (s - local) / ds;
            t = (t - step).clamp(a, a + panel);
            if step.abs() < 1e-15 {
                break;
            }
        }
        points.push(interp.position(t));
    }
    Curve::new(points, curve.gamma())
}
