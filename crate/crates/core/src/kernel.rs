//! Odd kernels `k: R^2 \ {0} -> R^2`, homogeneous of degree -1.
//!
//! A kernel is stored through its angular profile `Omega` on the unit circle,
//! `k(x) = Omega(x/|x|) / |x|`, with each component of `Omega` a trigonometric
//! polynomial in odd harmonics only. Oddness and homogeneity then hold by
//! construction and the Jacobian follows from the polar chain rule applied to
//! the analytically differentiated profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numeric::KahanMat;
use crate::{Error, Mat2, Point, Result};

/// Below this radius kernel evaluation is refused.
pub const SINGULAR_RADIUS: f64 = 1e-14;

/// Node count of the circle quadrature for the delta constants.
pub const CIRCLE_NODES: usize = 2048;

const INV_2PI: f64 = 1.0 / (2.0 * PI);

/// One harmonic `cos * cos(m phi) + sin * sin(m phi)` of a profile component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub harmonic: u32,
    pub cos: f64,
    pub sin: f64,
}

impl FourierTerm {
    pub fn new(harmonic: u32, cos: f64, sin: f64) -> Self {
        Self { harmonic, cos, sin }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelVariant {
    /// `k = grad-perp N = (1/2pi) (-x2, x1)/|x|^2`, the Euler kernel.
    BiotSavart,
    /// `k = grad N = (1/2pi) x/|x|^2`, a kernel with divergence `delta_0`.
    GradN,
    /// Explicit odd-harmonic profiles for the two components.
    AngularFourier {
        c1: Vec<FourierTerm>,
        c2: Vec<FourierTerm>,
    },
    LinearCombination(Vec<(f64, KernelSpec)>),
}

/// Flattened per-component profile: merged, strength applied.
#[derive(Debug, Clone, Default, PartialEq)]
struct Profile {
    comp: [Vec<FourierTerm>; 2],
}

impl Profile {
    fn add_terms(&mut self, c: usize, terms: &[FourierTerm], w: f64) {
        for t in terms {
            match self.comp[c].iter_mut().find(|e| e.harmonic == t.harmonic) {
                Some(e) => {
                    e.cos += w * t.cos;
                    e.sin += w * t.sin;
                }
                None => self.comp[c].push(FourierTerm::new(t.harmonic, w * t.cos, w * t.sin)),
            }
        }
        self.comp[c].sort_by_key(|t| t.harmonic);
    }

    fn max_harmonic(&self) -> u32 {
        self.comp
            .iter()
            .flat_map(|c| c.iter().map(|t| t.harmonic))
            .max()
            .unwrap_or(0)
    }
}

/// An odd, degree -1 homogeneous kernel with a strength multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    variant: KernelVariant,
    strength: f64,
    profile: Profile,
}

fn check_odd_terms(terms: &[FourierTerm]) -> Result<()> {
    for t in terms {
        if t.harmonic % 2 == 0 {
            return Err(Error::InvalidKernel(format!(
                "harmonic {} is even; odd kernels admit odd harmonics only",
                t.harmonic
            )));
        }
        if !(t.cos.is_finite() && t.sin.is_finite()) {
            return Err(Error::InvalidKernel("non-finite coefficient".into()));
        }
    }
    Ok(())
}

/// Coefficients listed for harmonics 1, 3, 5, ... in order.
pub fn odd_harmonic_terms(cos: &[f64], sin: &[f64]) -> Vec<FourierTerm> {
    let len = cos.len().max(sin.len());
    (0..len)
        .map(|j| {
            FourierTerm::new(
                2 * j as u32 + 1,
                cos.get(j).copied().unwrap_or(0.0),
                sin.get(j).copied().unwrap_or(0.0),
            )
        })
        .collect()
}

impl KernelSpec {
    pub fn biot_savart() -> Self {
        Self::build(KernelVariant::BiotSavart, 1.0)
    }

    pub fn grad_n() -> Self {
        Self::build(KernelVariant::GradN, 1.0)
    }

    /// The zero kernel, as an empty linear combination.
    pub fn zero() -> Self {
        Self::build(KernelVariant::LinearCombination(Vec::new()), 1.0)
    }

    pub fn angular_fourier(c1: Vec<FourierTerm>, c2: Vec<FourierTerm>) -> Result<Self> {
        check_odd_terms(&c1)?;
        check_odd_terms(&c2)?;
        Ok(Self::build(KernelVariant::AngularFourier { c1, c2 }, 1.0))
    }

    /// Like [`KernelSpec::angular_fourier`] but without rejecting even
    /// harmonics; exists so that [`validate`] can be exercised on kernels
    /// outside the admissible class.
    pub fn angular_fourier_unchecked(c1: Vec<FourierTerm>, c2: Vec<FourierTerm>) -> Self {
        Self::build(KernelVariant::AngularFourier { c1, c2 }, 1.0)
    }

    pub fn linear_combination(members: Vec<(f64, KernelSpec)>) -> Result<Self> {
        if members.iter().any(|(w, _)| !w.is_finite()) {
            return Err(Error::InvalidKernel("non-finite combination weight".into()));
        }
        Ok(Self::build(KernelVariant::LinearCombination(members), 1.0))
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::InvalidKernel("non-finite strength".into()));
        }
        self.strength = strength;
        self.profile = Self::flatten(&self.variant, strength);
        Ok(self)
    }

    fn build(variant: KernelVariant, strength: f64) -> Self {
        let profile = Self::flatten(&variant, strength);
        Self {
            variant,
            strength,
            profile,
        }
    }

    fn flatten(variant: &KernelVariant, strength: f64) -> Profile {
        let mut p = Profile::default();
        match variant {
            KernelVariant::BiotSavart => {
                p.add_terms(0, &[FourierTerm::new(1, 0.0, -INV_2PI)], strength);
                p.add_terms(1, &[FourierTerm::new(1, INV_2PI, 0.0)], strength);
            }
            KernelVariant::GradN => {
                p.add_terms(0, &[FourierTerm::new(1, INV_2PI, 0.0)], strength);
                p.add_terms(1, &[FourierTerm::new(1, 0.0, INV_2PI)], strength);
            }
            KernelVariant::AngularFourier { c1, c2 } => {
                p.add_terms(0, c1, strength);
                p.add_terms(1, c2, strength);
            }
            KernelVariant::LinearCombination(members) => {
                for (w, spec) in members {
                    for c in 0..2 {
                        p.add_terms(c, &spec.profile.comp[c], *w * strength);
                    }
                }
            }
        }
        p
    }

    pub fn variant(&self) -> &KernelVariant {
        &self.variant
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn is_zero(&self) -> bool {
        self.profile
            .comp
            .iter()
            .all(|c| c.iter().all(|t| t.cos == 0.0 && t.sin == 0.0))
    }

    /// Profile value `Omega(u)` and angular derivative `Omega'(u)` at the unit
    /// vector `u = (cos phi, sin phi)`.
    #[inline]
    pub fn profile(&self, u: Point) -> (Point, Point) {
        let mut val = [0.0; 2];
        let mut der = [0.0; 2];
        let max_h = self.profile.max_harmonic();
        if max_h <= 1 {
            for c in 0..2 {
                for t in &self.profile.comp[c] {
                    if t.harmonic == 1 {
                        val[c] += t.cos * u.x + t.sin * u.y;
                        der[c] += -t.cos * u.y + t.sin * u.x;
                    }
                }
            }
        } else {
            // powers (cos m phi, sin m phi) by complex multiplication
            for c in 0..2 {
                let mut pw = (1.0, 0.0);
                let mut m = 0u32;
                for t in &self.profile.comp[c] {
                    while m < t.harmonic {
                        pw = (pw.0 * u.x - pw.1 * u.y, pw.0 * u.y + pw.1 * u.x);
                        m += 1;
                    }
                    let h = t.harmonic as f64;
                    val[c] += t.cos * pw.0 + t.sin * pw.1;
                    der[c] += h * (-t.cos * pw.1 + t.sin * pw.0);
                }
            }
        }
        (Point::new(val[0], val[1]), Point::new(der[0], der[1]))
    }

    /// `k(x)` without the singularity check; `x` must be nonzero.
    #[inline]
    pub fn value(&self, x: Point) -> Point {
        let r = x.norm();
        let (om, _) = self.profile(x / r);
        om / r
    }

    /// `k(x)` and its Jacobian without the singularity check.
    #[inline]
    pub fn value_and_grad(&self, x: Point) -> (Point, Mat2) {
        let r = x.norm();
        let u = x / r;
        let (om, dom) = self.profile(u);
        let r2 = r * r;
        // d/dx = cos d_r - sin/r d_phi ; d/dy = sin d_r + cos/r d_phi
        let mut j = Mat2::zeros();
        for i in 0..2 {
            j[(i, 0)] = (-u.x * om[i] - u.y * dom[i]) / r2;
            j[(i, 1)] = (-u.y * om[i] + u.x * dom[i]) / r2;
        }
        (om / r, j)
    }

    /// Kernel value `k(x)`.
    pub fn eval(&self, x: Point) -> Result<Point> {
        check_nonsingular(x)?;
        Ok(self.value(x))
    }

    /// Jacobian `J[i][j] = d_j k_i (x)`; even and homogeneous of degree -2.
    pub fn grad(&self, x: Point) -> Result<Mat2> {
        check_nonsingular(x)?;
        Ok(self.value_and_grad(x).1)
    }

    /// `c[i][j] = int_{|x|=1} k_i(x) x_j dsigma(x)`, the coefficients of the
    /// Dirac mass in the distributional derivative `d_j k_i`.
    pub fn delta_constants(&self) -> DeltaConstants {
        let n = CIRCLE_NODES;
        let w = 2.0 * PI / n as f64;
        let mut acc = KahanMat::default();
        for q in 0..n {
            let (s, c) = (2.0 * PI * q as f64 / n as f64).sin_cos();
            let x = Point::new(c, s);
            let k = self.value(x);
            acc.add(&(k * x.transpose() * w));
        }
        DeltaConstants(acc.value())
    }

    /// Returns `|d_1(x_1 k) + d_2(x_2 k) - k|` at `x`, computed from the
    /// product rule `2k + J x`. Vanishes by Euler's identity `J x = -k`.
    pub fn euler_decomposition_check(&self, x: Point) -> Result<f64> {
        Ok((self.euler_decomposition(x)? - self.value(x)).norm())
    }

    /// The vector `d_1(x_1 k) + d_2(x_2 k)` itself.
    pub fn euler_decomposition(&self, x: Point) -> Result<Point> {
        check_nonsingular(x)?;
        let (k, j) = self.value_and_grad(x);
        Ok(2.0 * k + j * x)
    }
}

fn check_nonsingular(x: Point) -> Result<()> {
    let r = x.norm();
    if !(r >= SINGULAR_RADIUS) {
        return Err(Error::Singularity(r));
    }
    Ok(())
}

/// The matrix of delta constants of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaConstants(pub Mat2);

/// Outcome of the kernel-class checks.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub passed: bool,
    pub oddness_residual: f64,
    pub homogeneity_residual: f64,
    pub max_second_difference: f64,
    pub failures: Vec<String>,
}

/// Sampled checks of the kernel-class conditions: oddness, degree -1
/// homogeneity, and boundedness of second differences of the profile (a proxy
/// for `C^2` off the origin).
pub fn validate(spec: &KernelSpec) -> KernelReport {
    const SAMPLES: usize = 256;
    const TOL: f64 = 1e-12;
    const SECOND_DIFF_STEP: f64 = 1e-3;
    const SECOND_DIFF_BOUND: f64 = 1e6;

    let mut odd: f64 = 0.0;
    let mut homog: f64 = 0.0;
    let mut second: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let at = |phi: f64| Point::new(phi.cos(), phi.sin());
    for q in 0..SAMPLES {
        let phi = 2.0 * PI * (q as f64 + 0.37) / SAMPLES as f64;
        let x = at(phi);
        let k = spec.value(x);
        scale = scale.max(k.norm());
        odd = odd.max((spec.value(-x) + k).norm());
        for lambda in [0.5, 2.0, 10.0] {
            homog = homog.max((spec.value(lambda * x) - k / lambda).norm());
        }
        let h = SECOND_DIFF_STEP;
        let d2 = (spec.value(at(phi + h)) - 2.0 * k + spec.value(at(phi - h))) / (h * h);
        second = second.max(d2.norm());
    }
    let tol = TOL * scale.max(1.0);
    let mut failures = Vec::new();
    if !(odd <= tol) {
        failures.push(format!("oddness residual {odd:e} exceeds {tol:e}"));
    }
    if !(homog <= tol) {
        failures.push(format!("homogeneity residual {homog:e} exceeds {tol:e}"));
    }
    if !(second <= SECOND_DIFF_BOUND) {
        failures.push(format!(
            "second difference {second:e} exceeds {SECOND_DIFF_BOUND:e}"
        ));
    }
    KernelReport {
        passed: failures.is_empty(),
        oddness_residual: odd,
        homogeneity_residual: homog,
        max_second_difference: second,
        failures,
    }
}
