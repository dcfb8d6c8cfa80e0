//! Intersections of rays with the smooth (trigonometric) interpolant of a
//! closed curve. Polar quadratures centred at a point use these to integrate
//! exactly in the radial variable over `D`, without resolving the indicator
//! function by nodes.

use std::f64::consts::PI;

use crate::curve::{Curve, TrigInterpolant};
use crate::numeric::{spectral_derivative, spectral_upsample, GaussRule};
use crate::{cross, Point};

/// Default oversampling of the marker grid used to bracket crossings.
pub const DEFAULT_OVERSAMPLE: usize = 8;

#[derive(Debug, Clone)]
pub struct RayCaster {
    interp: TrigInterpolant,
    dense: Vec<Point>,
    dense_der: Vec<Point>,
    markers: Vec<Point>,
    oversample: usize,
    scale: f64,
}

impl RayCaster {
    pub fn new(curve: &Curve, oversample: usize) -> Self {
        let oversample = oversample.max(1);
        let dense = spectral_upsample(curve.points(), oversample);
        let dense_der = spectral_upsample(&spectral_derivative(curve.points()), oversample);
        let scale = curve
            .points()
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
            .max(curve.diameter());
        Self {
            interp: curve.interpolant(),
            dense,
            dense_der,
            markers: curve.points().to_vec(),
            oversample,
            scale,
        }
    }

    /// Index of the marker at `x`, if `x` is a marker up to roundoff.
    pub fn marker_at(&self, x: Point) -> Option<usize> {
        let tol = 1e-12 * self.scale.max(1.0);
        self.markers.iter().position(|m| (m - x).norm() <= tol)
    }

    fn dense_param(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.dense.len() as f64
    }

    /// Sorted distances `rho > 0` at which the ray `origin + rho * dir`
    /// (`dir` a unit vector) crosses the curve. When `origin` is marker
    /// `on_marker`, the trivial crossing at `rho = 0` is divided out.
    pub fn crossings(&self, origin: Point, dir: Point, on_marker: Option<usize>) -> Vec<f64> {
        let m = self.dense.len();
        let tiny = 1e-13 * self.scale.max(1.0);
        let mut out = Vec::new();
        match on_marker {
            None => {
                let g = |theta: f64| cross(dir, self.interp.position(theta) - origin);
                let mut ga = nonzero(cross(dir, self.dense[0] - origin));
                for j in 1..=m {
                    let gb = nonzero(cross(dir, self.dense[j % m] - origin));
                    if ga * gb < 0.0 {
                        let a = self.dense_param(j - 1);
                        let b = self.dense_param(j);
                        let t = illinois(&g, a, b, ga, gb);
                        let rho = dir.dot(&(self.interp.position(t) - origin));
                        if rho > tiny {
                            out.push(rho);
                        }
                    }
                    ga = gb;
                }
            }
            Some(i) => {
                let j0 = i * self.oversample;
                let theta0 = self.dense_param(j0);
                let (_, d0) = self.interp.eval(theta0);
                let c = nonzero(cross(dir, d0));
                let g = |s: f64| cross(dir, self.interp.chord(theta0, s)) / (2.0 * (0.5 * s).sin());
                let mut ga = c;
                for k in 1..=m {
                    let (s_b, gb) = if k == m {
                        (2.0 * PI, -c)
                    } else {
                        let s = 2.0 * PI * k as f64 / m as f64;
                        // near the origin the plain difference loses the sign
                        let chord = if k <= 4 || k + 4 >= m {
                            self.interp.chord(theta0, s)
                        } else {
                            self.dense[(j0 + k) % m] - origin
                        };
                        (s, nonzero(cross(dir, chord) / (2.0 * (0.5 * s).sin())))
                    };
                    if ga * gb < 0.0 {
                        let s_a = 2.0 * PI * (k - 1) as f64 / m as f64;
                        let s = illinois(&g, s_a, s_b, ga, gb);
                        let rho = dir.dot(&self.interp.chord(theta0, s));
                        if rho > tiny {
                            out.push(rho);
                        }
                    }
                    ga = gb;
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// Directions (angles in `[0, 2pi)`) in which the ray from `origin` is
    /// tangent to the curve. Across these the inside intervals appear,
    /// vanish or merge, so the angular integrands are only piecewise smooth.
    /// From a marker the two tangent directions at the marker are included.
    pub fn tangent_events(&self, origin: Point, on_marker: Option<usize>) -> Vec<f64> {
        let m = self.dense.len();
        let mut angles = Vec::new();
        let mut push = |v: Point| {
            let a = v.y.atan2(v.x);
            angles.push(if a < 0.0 { a + 2.0 * PI } else { a });
        };
        match on_marker {
            None => {
                let f = |t: f64| {
                    let (p, d) = self.interp.eval(t);
                    cross(p - origin, d)
                };
                let sample = |j: usize| cross(self.dense[j % m] - origin, self.dense_der[j % m]);
                let mut fa = nonzero(sample(0));
                for j in 1..=m {
                    let fb = nonzero(sample(j));
                    if fa * fb < 0.0 {
                        let t = illinois(&f, self.dense_param(j - 1), self.dense_param(j), fa, fb);
                        push(self.interp.position(t) - origin);
                    }
                    fa = fb;
                }
            }
            Some(i) => {
                let j0 = i * self.oversample;
                let theta0 = self.dense_param(j0);
                let (_, d0) = self.interp.eval(theta0);
                push(d0);
                push(-d0);
                // deflate the double root at s = 0
                let f = |s: f64| {
                    let (_, d) = self.interp.eval(theta0 + s);
                    let w = 2.0 * (0.5 * s).sin();
                    cross(self.interp.chord(theta0, s), d) / (w * w)
                };
                let mut fa = f(2.0 * PI / m as f64);
                for k in 2..m {
                    let s = 2.0 * PI * k as f64 / m as f64;
                    let fb = if k <= 4 || k + 4 >= m {
                        f(s)
                    } else {
                        let w = 2.0 * (0.5 * s).sin();
                        let j = (j0 + k) % m;
                        cross(self.dense[j] - origin, self.dense_der[j]) / (w * w)
                    };
                    let fb = nonzero(fb);
                    if fa * fb < 0.0 {
                        let s_a = 2.0 * PI * (k - 1) as f64 / m as f64;
                        let s = illinois(&f, s_a, s, nonzero(fa), fb);
                        push(self.interp.chord(theta0, s));
                    }
                    fa = fb;
                }
            }
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        angles
    }

    /// Angular nodes and weights on `[0, 2pi)` adapted to the tangent events
    /// seen from `origin`: Gauss panels between consecutive events under the
    /// substitution `3u^2 - 2u^3`, which absorbs the square-root behaviour of
    /// chord lengths at grazing rays. About `n_nodes` nodes in total.
    pub fn angular_rule(
        &self,
        origin: Point,
        on_marker: Option<usize>,
        n_nodes: usize,
        order: usize,
    ) -> Vec<(f64, f64)> {
        let events = self.tangent_events(origin, on_marker);
        if events.is_empty() {
            let h = 2.0 * PI / n_nodes as f64;
            return (0..n_nodes).map(|q| (h * (q as f64 + 0.5), h)).collect();
        }
        let rule = GaussRule::new(order);
        let per_radian = n_nodes as f64 / (2.0 * PI * order as f64);
        let mut out = Vec::with_capacity(n_nodes + order * events.len());
        for (k, &a) in events.iter().enumerate() {
            let b = if k + 1 < events.len() {
                events[k + 1]
            } else {
                events[0] + 2.0 * PI
            };
            let gap = b - a;
            let panels = ((gap * per_radian).ceil() as usize).max(1);
            for p in 0..panels {
                let u0 = p as f64 / panels as f64;
                let u1 = (p + 1) as f64 / panels as f64;
                for (u, w) in rule.on(u0, u1) {
                    let theta = a + gap * u * u * (3.0 - 2.0 * u);
                    out.push((theta, w * gap * 6.0 * u * (1.0 - u)));
                }
            }
        }
        out
    }

    /// Radial intervals `(a, b)` along the ray lying inside the curve,
    /// determined by crossing parity counted from infinity.
    pub fn inside_intervals(
        &self,
        origin: Point,
        dir: Point,
        on_marker: Option<usize>,
    ) -> Vec<(f64, f64)> {
        intervals_from_crossings(&self.crossings(origin, dir, on_marker))
    }
}

pub(crate) fn intervals_from_crossings(rhos: &[f64]) -> Vec<(f64, f64)> {
    let m = rhos.len();
    let mut out = Vec::with_capacity(m / 2 + 1);
    let mut k = m;
    while k >= 2 {
        out.push((rhos[k - 2], rhos[k - 1]));
        k -= 2;
    }
    if k == 1 {
        out.push((0.0, rhos[0]));
    }
    out.reverse();
    out
}

#[inline]
fn nonzero(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        x
    }
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn illinois(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            return c;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            side = 0;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (a + b)
}
