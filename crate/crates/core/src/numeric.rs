//! Small numerical helpers shared across modules: compensated summation,
//! FFT-based periodic differentiation/interpolation and Gauss-Legendre rules.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Mat2, Point};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for plane vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanVec {
    x: KahanSum,
    y: KahanSum,
}

impl KahanVec {
    #[inline]
    pub fn add(&mut self, v: Point) {
        self.x.add(v.x);
        self.y.add(v.y);
    }

    pub fn value(&self) -> Point {
        Point::new(self.x.value(), self.y.value())
    }
}

/// Compensated accumulator for 2x2 matrices.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanMat {
    e: [KahanSum; 4],
}

impl KahanMat {
    #[inline]
    pub fn add(&mut self, m: &Mat2) {
        self.e[0].add(m[(0, 0)]);
        self.e[1].add(m[(0, 1)]);
        self.e[2].add(m[(1, 0)]);
        self.e[3].add(m[(1, 1)]);
    }

    pub fn value(&self) -> Mat2 {
        Mat2::new(
            self.e[0].value(),
            self.e[1].value(),
            self.e[2].value(),
            self.e[3].value(),
        )
    }
}

/// Largest singular value of a 2x2 matrix.
pub fn operator_norm(m: &Mat2) -> f64 {
    let fro2 = m.iter().map(|v| v * v).sum::<f64>();
    let det = m.determinant();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

/// Signed wavenumber of FFT bin `k` for a length-`n` transform.
#[inline]
pub(crate) fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn to_complex(points: &[Point]) -> Vec<Complex64> {
    points.iter().map(|p| Complex64::new(p.x, p.y)).collect()
}

/// Normalized discrete Fourier coefficients `c_k = (1/n) sum_j z_j e^{-i k theta_j}`
/// of the points read as complex numbers `x + i y`.
pub(crate) fn fourier_coefficients(points: &[Point]) -> Vec<Complex64> {
    let n = points.len();
    let mut buf = to_complex(points);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Trigonometric derivative with respect to the uniform parameter on `[0, 2pi)`.
///
/// The Nyquist mode is dropped, so the result is exact for band-limited data
/// whose highest harmonic is below `n/2`.
pub fn spectral_derivative(points: &[Point]) -> Vec<Point> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut coeffs = fourier_coefficients(points);
    for (k, c) in coeffs.iter_mut().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, wavenumber(k, n) as f64);
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut coeffs);
    coeffs.iter().map(|c| Point::new(c.re, c.im)).collect()
}

/// Values of the trigonometric interpolant on a grid `factor` times finer.
pub fn spectral_upsample(points: &[Point], factor: usize) -> Vec<Point> {
    let n = points.len();
    let m = n * factor;
    let coeffs = fourier_coefficients(points);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    for (k, &c) in coeffs.iter().enumerate() {
        let w = wavenumber(k, n);
        if n.is_multiple_of(2) && k == n / 2 {
            // split the Nyquist mode symmetrically so real data stays real
            padded[n / 2] += c * 0.5;
            padded[m - n / 2] += c * 0.5;
        } else {
            let idx = if w >= 0 {
                w as usize
            } else {
                (m as i64 + w) as usize
            };
            padded[idx] += c;
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(m).process(&mut padded);
    padded.iter().map(|c| Point::new(c.re, c.im)).collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterator over `(x, w)` pairs on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = KahanSum::new();
        for (x, w) in self.on(a, b) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = GaussRule::new(8);
        // exact up to degree 15
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        let wsum: f64 = rule.on(0.0, 1.0).map(|(_, w)| w).sum();
        assert!((wsum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-20);
    }

    #[test]
    fn upsample_reproduces_band_limited_data() {
        let n = 32;
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Point::new(t.cos() + 0.2 * (3.0 * t).sin(), 0.5 * t.sin())
            })
            .collect();
        let fine = spectral_upsample(&pts, 4);
        for (j, p) in fine.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / (4 * n) as f64;
            let e = Point::new(t.cos() + 0.2 * (3.0 * t).sin(), 0.5 * t.sin());
            assert!((p - e).norm() < 1e-13);
        }
    }

    #[test]
    fn operator_norm_of_rotation_and_shear() {
        let r = Mat2::new(0.0, -0.5, 0.5, 0.0);
        assert!((operator_norm(&r) - 0.5).abs() < 1e-15);
        let e = Mat2::new(0.0, -2.0 / 3.0, 1.0 / 3.0, 0.0);
        assert!((operator_norm(&e) - 2.0 / 3.0).abs() < 1e-15);
    }
}
