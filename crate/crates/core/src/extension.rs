//! First-order jets on the boundary and their Whitney extension.
//!
//! Given a tangent field `tau` on the curve, the stream function `phi` with
//! jet `phi = 0`, `grad phi = (-tau_2, tau_1)` on the curve is extended to a
//! collar by the Whitney construction; `g = (d_2 phi, -d_1 phi)` is then a
//! divergence-free field restricting to `tau` on the curve.

use std::collections::HashMap;

use crate::curve::{holder_seminorm_ambient, Curve, VectorFieldOnCurve};
use crate::{rot_ccw, rot_cw, Error, Point, Result};

/// Tolerance of the tangency precondition.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Support of each bump is the cube dilated by this factor.
const DILATION: f64 = 1.25;

/// Outcome of [`jet_constant_verify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetVerification {
    /// `sup |(y - x) . N(x)| / |y - x|^{1+gamma}` over marker pairs.
    pub empirical_sup: f64,
    /// Holder seminorm of `N` with the ambient distance.
    pub holder_norm: f64,
    pub ratio: f64,
    /// `2^{3 + gamma/2}`.
    pub bound: f64,
}

/// Checks `|(y - x) . N(x)| <= A ||N||_gamma |y - x|^{1+gamma}` over all marker
/// pairs with `A = 2^{3 + gamma/2}`, failing if the ratio exceeds `A`.
pub fn jet_constant_verify(
    curve: &Curve,
    normal: &VectorFieldOnCurve,
    gamma: f64,
) -> Result<JetVerification> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} is not in (0, 1)")));
    }
    normal.check_len(curve.n_markers())?;
    let pts = curve.points();
    if let Some(i) = normal.values.iter().position(|v| !(v.norm() > 0.0)) {
        return Err(Error::param("normal", format!("vanishes at marker {i}")));
    }
    let mut sup: f64 = 0.0;
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            if i != j {
                let d = y - x;
                sup = sup.max(d.dot(&normal.values[i]).abs() / d.norm().powf(1.0 + gamma));
            }
        }
    }
    let holder_norm = holder_seminorm_ambient(pts, &normal.values, gamma);
    let ratio = sup / holder_norm;
    let bound = 2f64.powf(3.0 + 0.5 * gamma);
    if !(ratio <= bound) {
        return Err(Error::JetBoundViolated { ratio, bound });
    }
    Ok(JetVerification {
        empirical_sup: sup,
        holder_norm,
        ratio,
        bound,
    })
}

/// Values and gradients of `phi` at the markers.
#[derive(Debug, Clone)]
pub struct Jet {
    carrier: Curve,
    values: Vec<f64>,
    gradients: Vec<Point>,
    gamma: f64,
    constant: f64,
}

impl Jet {
    /// The jet `(0, -tau_2, tau_1)` of the stream function of `tau`.
    pub fn from_tangent(curve: &Curve, tangent: &VectorFieldOnCurve) -> Result<Self> {
        tangent.check_len(curve.n_markers())?;
        let (_, normal) = curve.tangent_normal()?;
        for (i, (t, n)) in tangent.values.iter().zip(&normal.values).enumerate() {
            let value = t.dot(n).abs();
            if !(value < TANGENCY_TOL * t.norm().max(1.0)) {
                return Err(Error::NotTangent { index: i, value });
            }
        }
        let gradients: Vec<Point> = tangent.values.iter().map(|&t| rot_ccw(t)).collect();
        let values = vec![0.0; curve.n_markers()];
        let constant = whitney_constant(curve.points(), &values, &gradients, curve.gamma());
        if !constant.is_finite() {
            return Err(Error::param("tangent", "jet constant is not finite"));
        }
        Ok(Self {
            carrier: curve.clone(),
            values,
            gradients,
            gamma: curve.gamma(),
            constant,
        })
    }

    pub fn carrier(&self) -> &Curve {
        &self.carrier
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradients(&self) -> &[Point] {
        &self.gradients
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Sup of the Whitney compatibility ratios
    /// `|phi(y) - phi(x) - grad phi(x).(y - x)| / |y - x|^{1+gamma}` and
    /// `|grad phi(x) - grad phi(y)| / |x - y|^gamma`.
    pub fn constant(&self) -> f64 {
        self.constant
    }
}

fn whitney_constant(points: &[Point], values: &[f64], grads: &[Point], gamma: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            let d = points[j] - points[i];
            let r = d.norm();
            let taylor = (values[j] - values[i] - grads[i].dot(&d)).abs() / r.powf(1.0 + gamma);
            let grad = (grads[i] - grads[j]).norm() / r.powf(gamma);
            best = best.max(taylor).max(grad);
        }
    }
    best
}

/// Knobs of the Whitney construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitneyOptions {
    /// Width of the region where the jet polynomials are kept; `None` means
    /// the curve diameter.
    pub collar: Option<f64>,
    /// Minimal depth of the dyadic tree. The depth grows beyond this until
    /// the finest cubes are below an eighth of the smallest marker gap.
    pub min_depth: usize,
    pub max_depth: usize,
    /// Allowed number of bump supports containing a point.
    pub overlap_limit: usize,
}

impl Default for WhitneyOptions {
    fn default() -> Self {
        Self {
            collar: None,
            min_depth: 12,
            max_depth: 20,
            overlap_limit: 16,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cube {
    center: Point,
    half: f64,
    base: Point,
    grad: Point,
    value: f64,
    active: bool,
}

/// Whitney cover of a square around the curve with per-cube first-order
/// polynomials and a smooth partition of unity.
#[derive(Debug, Clone)]
pub struct WhitneyExtension {
    jet: Jet,
    origin: Point,
    side: f64,
    collar: f64,
    depth: usize,
    cubes: Vec<Cube>,
    levels: Vec<HashMap<(i64, i64), usize>>,
    max_overlap: usize,
}

fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - t * t;
    let b = (-1.0 / s).exp();
    (b, -2.0 * t / (s * s) * b)
}

fn nearest_marker(points: &[Point], z: Point) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (p - z).norm_squared();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

/// Builds the extension of the stream function of `tangent`.
pub fn whitney_extend(
    curve: &Curve,
    tangent: &VectorFieldOnCurve,
    opts: WhitneyOptions,
) -> Result<WhitneyExtension> {
    let jet = Jet::from_tangent(curve, tangent)?;
    let pts = curve.points();
    let collar = opts.collar.unwrap_or_else(|| curve.diameter());
    if !(collar > 0.0 && collar.is_finite()) {
        return Err(Error::param("collar", format!("{collar} is not positive")));
    }
    let lo = pts
        .iter()
        .fold(Point::repeat(f64::INFINITY), |a, p| a.inf(p));
    let hi = pts
        .iter()
        .fold(Point::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
    let margin = 2.0 * collar;
    let side = (hi - lo).max() + 2.0 * margin;
    let origin = 0.5 * (lo + hi) - Point::repeat(0.5 * side);

    let target = curve.min_gap() / 8.0;
    let needed = (side / target).log2().ceil().max(0.0) as usize;
    let depth = needed.max(opts.min_depth).min(opts.max_depth);

    let mut cubes = Vec::new();
    let mut levels = vec![HashMap::new(); depth + 1];
    let mut stack = vec![(0usize, 0i64, 0i64)];
    while let Some((level, i, j)) = stack.pop() {
        let s = side / (1u64 << level) as f64;
        let center = origin + Point::new((i as f64 + 0.5) * s, (j as f64 + 0.5) * s);
        let dist = curve.distance_to(center);
        if dist < 2.0 * s && level < depth {
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                stack.push((level + 1, 2 * i + di, 2 * j + dj));
            }
            continue;
        }
        let active = dist <= collar;
        let (base, grad, value) = if active {
            let k = nearest_marker(pts, center);
            (pts[k], jet.gradients[k], jet.values[k])
        } else {
            (center, Point::zeros(), 0.0)
        };
        levels[level].insert((i, j), cubes.len());
        cubes.push(Cube {
            center,
            half: 0.5 * s,
            base,
            grad,
            value,
            active,
        });
    }

    let mut ext = WhitneyExtension {
        jet,
        origin,
        side,
        collar,
        depth,
        cubes,
        levels,
        max_overlap: 0,
    };
    let mut max_overlap = 0;
    for c in &ext.cubes {
        for (sx, sy) in [
            (0.0, 0.0),
            (1.0, 1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
        ] {
            let probe = c.center + Point::new(sx, sy) * c.half;
            max_overlap = max_overlap.max(ext.overlap_at(probe));
        }
    }
    if max_overlap > opts.overlap_limit {
        return Err(Error::CubeOverlap(max_overlap));
    }
    ext.max_overlap = max_overlap;
    Ok(ext)
}

impl WhitneyExtension {
    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn n_cubes(&self) -> usize {
        self.cubes.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    /// Beyond this distance from the curve every covering cube carries the
    /// zero polynomial, so `phi` vanishes identically.
    pub fn cutoff_radius(&self) -> f64 {
        1.5 * self.collar
    }

    /// Largest number of overlapping supports seen at the construction probes.
    pub fn max_overlap(&self) -> usize {
        self.max_overlap
    }

    fn in_root(&self, x: Point) -> bool {
        let r = x - self.origin;
        r.x >= 0.0 && r.y >= 0.0 && r.x < self.side && r.y < self.side
    }

    fn for_each_support(&self, x: Point, mut f: impl FnMut(&Cube, f64, f64)) {
        let r = x - self.origin;
        for (level, map) in self.levels.iter().enumerate() {
            if map.is_empty() {
                continue;
            }
            let s = self.side / (1u64 << level) as f64;
            let i = (r.x / s).floor() as i64;
            let j = (r.y / s).floor() as i64;
            for di in -1..=1 {
                for dj in -1..=1 {
                    if let Some(&k) = map.get(&(i + di, j + dj)) {
                        let c = &self.cubes[k];
                        let w = DILATION * c.half;
                        let t1 = (x.x - c.center.x) / w;
                        let t2 = (x.y - c.center.y) / w;
                        if t1.abs() < 1.0 && t2.abs() < 1.0 {
                            f(c, t1, t2);
                        }
                    }
                }
            }
        }
    }

    fn overlap_at(&self, x: Point) -> usize {
        let mut n = 0;
        self.for_each_support(x, |_, _, _| n += 1);
        n
    }

    /// `phi(x)` and its exact gradient; zero outside the covered square.
    pub fn eval(&self, x: Point) -> (f64, Point) {
        if !self.in_root(x) {
            return (0.0, Point::zeros());
        }
        let mut sum = 0.0;
        let mut dsum = Point::zeros();
        let mut acc = 0.0;
        let mut dacc = Point::zeros();
        self.for_each_support(x, |c, t1, t2| {
            let w = DILATION * c.half;
            let (b1, db1) = bump(t1);
            let (b2, db2) = bump(t2);
            let psi = b1 * b2;
            let dpsi = Point::new(db1 * b2, b1 * db2) / w;
            sum += psi;
            dsum += dpsi;
            if c.active {
                let p = c.value + c.grad.dot(&(x - c.base));
                acc += p * psi;
                dacc += c.grad * psi + dpsi * p;
            }
        });
        if sum <= 0.0 {
            return (0.0, Point::zeros());
        }
        let phi = acc / sum;
        (phi, (dacc - dsum * phi) / sum)
    }

    /// `g = (d_2 phi, -d_1 phi)`.
    pub fn field(&self, x: Point) -> Point {
        rot_cw(self.eval(x).1)
    }
}

/// `phi(x)` and `grad phi(x)`.
pub fn eval_extension(ext: &WhitneyExtension, x: Point) -> (f64, Point) {
    ext.eval(x)
}

/// `g(x) = (d_2 phi(x), -d_1 phi(x))`.
pub fn divergence_free_field(ext: &WhitneyExtension, x: Point) -> Point {
    ext.field(x)
}

/// Holder seminorm of `g` over the given probe points (ambient distance).
pub fn sampled_field_holder(ext: &WhitneyExtension, probes: &[Point], gamma: f64) -> f64 {
    let values: Vec<Point> = probes.iter().map(|&p| ext.field(p)).collect();
    holder_seminorm_ambient(probes, &values, gamma)
}
