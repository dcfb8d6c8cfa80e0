//! Maximal truncated singular integrals `T*(chi_D)(x)` of even, zero-mean,
//! degree -2 kernels.
//!
//! With `y = x + rho d`, `K(x - y) = K(d) / rho^2`, so the truncated integral
//! over `D \ B(x, eps)` reduces to `int_{S^1} K(d) L_eps(d) dtheta` where
//! `L_eps(d) = sum log(b / max(a, eps))` over the inside intervals `(a, b)` of
//! the ray with `b > eps`. The radial integral is exact once the crossings
//! are known, and one set of crossings serves the whole `eps` grid.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::curve::Curve;
use crate::kernel::{FourierTerm, KernelSpec};
use crate::numeric::KahanSum;
use crate::rays::{RayCaster, DEFAULT_OVERSAMPLE};
use crate::{Error, Point, Result};

const EVEN_TOL: f64 = 1e-12;
const CHECK_SAMPLES: usize = 512;

/// An even kernel `K(y) = P(y/|y|) / |y|^2` with zero mean on the circle.
#[derive(Debug, Clone, PartialEq)]
pub enum EvenKernel {
    /// Profile `P` given by even harmonics (the zeroth must be absent).
    Profile(Vec<FourierTerm>),
    /// The entry `d_col k_row` of the Jacobian of an odd kernel.
    KernelEntry {
        spec: KernelSpec,
        row: usize,
        col: usize,
    },
}

impl EvenKernel {
    /// `(y1^2 - y2^2) / |y|^4`.
    pub fn cos2() -> Self {
        Self::Profile(vec![FourierTerm::new(2, 1.0, 0.0)])
    }

    /// Entry `(row, col)` of the Jacobian of the Biot-Savart kernel.
    pub fn biot_savart_entry(row: usize, col: usize) -> Self {
        Self::KernelEntry {
            spec: KernelSpec::biot_savart(),
            row,
            col,
        }
    }

    /// Parse names such as `bs11`, `bs21`, `gn12` (one-based row then column).
    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || Error::param("kernel-entry", format!("unknown even kernel '{name}'"));
        if name == "cos2" {
            return Ok(Self::cos2());
        }
        if name.len() != 4 {
            return Err(bad());
        }
        let spec = match &name[..2] {
            "bs" => KernelSpec::biot_savart(),
            "gn" => KernelSpec::grad_n(),
            _ => return Err(bad()),
        };
        let digit = |c: u8| match c {
            b'1' => Ok(0),
            b'2' => Ok(1),
            _ => Err(bad()),
        };
        let b = name.as_bytes();
        Ok(Self::KernelEntry {
            spec,
            row: digit(b[2])?,
            col: digit(b[3])?,
        })
    }

    /// `K(u)` for a unit vector `u`.
    pub fn on_circle(&self, u: Point) -> f64 {
        match self {
            Self::Profile(terms) => {
                let phi = u.y.atan2(u.x);
                terms
                    .iter()
                    .map(|t| {
                        let (s, c) = (t.harmonic as f64 * phi).sin_cos();
                        t.cos * c + t.sin * s
                    })
                    .sum()
            }
            Self::KernelEntry { spec, row, col } => spec.value_and_grad(u).1[(*row, *col)],
        }
    }

    /// `K(y)`, `y` nonzero.
    pub fn value(&self, y: Point) -> f64 {
        let r2 = y.norm_squared();
        self.on_circle(y / r2.sqrt()) / r2
    }

    /// Checks evenness and the vanishing circle mean.
    pub fn validate(&self) -> Result<()> {
        if let Self::KernelEntry { row, col, .. } = self {
            if *row > 1 || *col > 1 {
                return Err(Error::InvalidKernel(format!(
                    "entry ({row}, {col}) out of range"
                )));
            }
        }
        let mut mean = KahanSum::new();
        let mut odd_part: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for q in 0..CHECK_SAMPLES {
            let t = 2.0 * PI * (q as f64 + 0.25) / CHECK_SAMPLES as f64;
            let u = Point::new(t.cos(), t.sin());
            let k = self.on_circle(u);
            if !k.is_finite() {
                return Err(Error::InvalidKernel("non-finite kernel value".into()));
            }
            scale = scale.max(k.abs());
            odd_part = odd_part.max((k - self.on_circle(-u)).abs());
            mean.add(k);
        }
        let mean = mean.value() / CHECK_SAMPLES as f64;
        let tol = EVEN_TOL * scale.max(1.0);
        if odd_part > tol {
            return Err(Error::InvalidKernel(format!(
                "kernel is not even (residual {odd_part:e})"
            )));
        }
        if mean.abs() > tol {
            return Err(Error::InvalidKernel(format!(
                "kernel has nonzero circle mean {mean:e}"
            )));
        }
        Ok(())
    }
}

/// Truncation grid and quadrature resolution for [`tstar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TstarConfig {
    pub n_eps: usize,
    /// Largest radius; `None` means half the diameter.
    pub eps_max: Option<f64>,
    /// Smallest radius; `None` means `1e-4` times the diameter.
    pub eps_min: Option<f64>,
    pub angular_nodes: usize,
    /// Maximal number of (direction, radius) evaluations.
    pub budget: usize,
    pub oversample: usize,
}

impl Default for TstarConfig {
    fn default() -> Self {
        Self {
            n_eps: 40,
            eps_max: None,
            eps_min: None,
            angular_nodes: 4096,
            budget: 10_000_000,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

impl TstarConfig {
    fn grid(&self, diameter: f64) -> Result<Vec<f64>> {
        let hi = self.eps_max.unwrap_or(0.5 * diameter);
        let lo = self.eps_min.unwrap_or(1e-4 * diameter);
        if self.n_eps < 2 {
            return Err(Error::param("n_eps", "need at least two radii"));
        }
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::param(
                "epsilon",
                format!("need 0 < eps_min < eps_max, got {lo} and {hi}"),
            ));
        }
        if self.angular_nodes < 16 {
            return Err(Error::param("angular_nodes", "need at least 16 directions"));
        }
        let ratio = (lo / hi).powf(1.0 / (self.n_eps - 1) as f64);
        Ok((0..self.n_eps)
            .map(|i| {
                if i + 1 == self.n_eps {
                    lo
                } else {
                    hi * ratio.powi(i as i32)
                }
            })
            .collect())
    }
}

/// Truncated integrals on a decreasing radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSweep {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// `running_sup[i] = max_{j <= i} |values[j]|`.
    pub running_sup: Vec<f64>,
    /// Set when the node budget cut the sweep short.
    pub budget_exceeded: bool,
}

impl TruncationSweep {
    pub fn sup(&self) -> f64 {
        self.running_sup.last().copied().unwrap_or(0.0)
    }
}

/// Reusable ray caster for repeated evaluations on one curve.
pub struct TstarEvaluator<'a> {
    curve: &'a Curve,
    rays: RayCaster,
    config: TstarConfig,
}

impl<'a> TstarEvaluator<'a> {
    pub fn new(curve: &'a Curve, config: TstarConfig) -> Self {
        Self {
            curve,
            rays: RayCaster::new(curve, config.oversample),
            config,
        }
    }

    pub fn sweep(&self, kernel: &EvenKernel, x: Point) -> Result<TruncationSweep> {
        Ok(self.sweep_all(std::slice::from_ref(kernel), x)?.remove(0))
    }

    /// Sweeps for several kernels at `x`, sharing the ray/curve crossings.
    pub fn sweep_all(&self, kernels: &[EvenKernel], x: Point) -> Result<Vec<TruncationSweep>> {
        for k in kernels {
            k.validate()?;
        }
        let mut epsilons = self.config.grid(self.curve.diameter())?;
        let n_dir = self.config.angular_nodes;
        let budget_eps = self.config.budget / n_dir;
        let budget_exceeded = budget_eps < epsilons.len();
        if budget_exceeded {
            if budget_eps == 0 {
                return Err(Error::param(
                    "budget",
                    format!(
                        "{} nodes cannot cover {n_dir} directions",
                        self.config.budget
                    ),
                ));
            }
            epsilons.truncate(budget_eps);
        }

        let on_marker = self.rays.marker_at(x);
        let dirs: Vec<(Point, Vec<(f64, f64)>)> = (0..n_dir)
            .into_par_iter()
            .map(|q| {
                let t = 2.0 * PI * (q as f64 + 0.5) / n_dir as f64;
                let d = Point::new(t.cos(), t.sin());
                (d, self.rays.inside_intervals(x, d, on_marker))
            })
            .collect();

        let w = 2.0 * PI / n_dir as f64;
        let sweeps = kernels
            .iter()
            .map(|kernel| {
                let weights: Vec<f64> = dirs.iter().map(|(d, _)| kernel.on_circle(*d)).collect();
                let mut values = Vec::with_capacity(epsilons.len());
                let mut running_sup = Vec::with_capacity(epsilons.len());
                let mut sup: f64 = 0.0;
                for &eps in &epsilons {
                    let mut acc = KahanSum::new();
                    for (k, (_, intervals)) in weights.iter().zip(&dirs) {
                        let mut len = 0.0;
                        for &(a, b) in intervals {
                            if b > eps {
                                len += (b / a.max(eps)).ln();
                            }
                        }
                        acc.add(k * len);
                    }
                    let v = acc.value() * w;
                    sup = sup.max(v.abs());
                    values.push(v);
                    running_sup.push(sup);
                }
                TruncationSweep {
                    epsilons: epsilons.clone(),
                    values,
                    running_sup,
                    budget_exceeded,
                }
            })
            .collect();
        Ok(sweeps)
    }
}

/// `eps -> int_{D \ B(x, eps)} K(x - y) dy` on the configured grid.
pub fn tstar(
    curve: &Curve,
    kernel: &EvenKernel,
    x: Point,
    config: TstarConfig,
) -> Result<TruncationSweep> {
    TstarEvaluator::new(curve, config).sweep(kernel, x)
}

/// `A (1 + log+(sqrt(area) q))`.
pub fn log_bound_rhs(area: f64, q: f64, a: f64) -> f64 {
    a * (1.0 + (area.sqrt() * q).ln().max(0.0))
}

/// Constants `A` fitted to observed `T*` values against the log-bound shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBoundFit {
    /// Least-squares `A` for `T* ~ A (1 + log+)`.
    pub least_squares: f64,
    /// Smallest `A` that bounds every sample.
    pub envelope: f64,
    /// `(observed, shape)` per sample, where `shape = 1 + log+(sqrt|D| q)`.
    pub samples: Vec<(f64, f64)>,
}

impl LogBoundFit {
    /// Relative margins `1 - observed / (A shape)` for a given `A`.
    pub fn margins(&self, a: f64) -> Vec<f64> {
        self.samples
            .iter()
            .map(|(obs, shape)| 1.0 - obs / (a * shape))
            .collect()
    }
}

/// Fits `A` from `(tstar_sup, area, q)` triples.
pub fn fit_log_bound(samples: &[(f64, f64, f64)]) -> Result<LogBoundFit> {
    if samples.is_empty() {
        return Err(Error::param("samples", "nothing to fit"));
    }
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(obs, area, q)| (obs, log_bound_rhs(area, q, 1.0)))
        .collect();
    let num: f64 = pairs.iter().map(|(o, s)| o * s).sum();
    let den: f64 = pairs.iter().map(|(_, s)| s * s).sum();
    let envelope = pairs.iter().map(|(o, s)| o / s).fold(0.0, f64::max);
    Ok(LogBoundFit {
        least_squares: num / den,
        envelope,
        samples: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{preset_shape, Shape};
    use crate::numeric::GaussRule;

    fn disc(n: usize) -> Curve {
        preset_shape(Shape::Circle { radius: 1.0 }, n, 0.5).unwrap()
    }

    /// Unit disc at the boundary point (1,0): inward rays have chord
    /// `-2 cos t`, so `L_eps = log+(-2 cos t / eps)`. Integrated with dense
    /// Gauss-Legendre panels split at the kinks `-2 cos t = eps`.
    fn disc_boundary_oracle(kernel: &EvenKernel, eps: f64) -> f64 {
        let rule = GaussRule::new(40);
        let t0 = (-eps / 2.0).acos(); // in (pi/2, pi]
        let f = |t: f64| {
            let chord = -2.0 * t.cos();
            if chord <= eps {
                0.0
            } else {
                kernel.on_circle(Point::new(t.cos(), t.sin())) * (chord / eps).ln()
            }
        };
        let panels = 400;
        let mut acc = 0.0;
        for (a, b) in [(t0, PI), (PI, 2.0 * PI - t0)] {
            for p in 0..panels {
                let lo = a + (b - a) * p as f64 / panels as f64;
                let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
                acc += rule.integrate(lo, hi, f);
            }
        }
        acc
    }

    #[test]
    fn centre_of_disc_gives_zero() {
        let c = disc(128);
        let s = tstar(
            &c,
            &EvenKernel::cos2(),
            Point::zeros(),
            TstarConfig::default(),
        )
        .unwrap();
        assert!(s.sup() < 1e-12, "{}", s.sup());
        assert!(s.epsilons.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn boundary_point_of_disc_matches_polar_oracle() {
        let c = disc(128);
        for kernel in [EvenKernel::cos2(), EvenKernel::biot_savart_entry(0, 1)] {
            let s = tstar(&c, &kernel, Point::new(1.0, 0.0), TstarConfig::default()).unwrap();
            assert!(!s.budget_exceeded);
            for (eps, v) in s.epsilons.iter().zip(&s.values) {
                let o = disc_boundary_oracle(&kernel, *eps);
                assert!((v - o).abs() < 1e-3, "eps {eps}: {v} vs {o}");
            }
            let max = s.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert_eq!(s.sup(), max);
            assert!(s.sup().is_finite());
        }
    }

    #[test]
    fn small_radius_values_stabilize() {
        let c = preset_shape(Shape::PerturbedCircle { epsilon: 0.3, m: 5 }, 256, 0.5).unwrap();
        let x = c.points()[7];
        let s = tstar(
            &c,
            &EvenKernel::biot_savart_entry(1, 1),
            x,
            TstarConfig::default(),
        )
        .unwrap();
        let tail = &s.values[s.values.len() - 10..];
        for w in tail.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-3, "{w:?}");
        }
    }

    #[test]
    fn budget_truncates_the_sweep() {
        let c = disc(64);
        let cfg = TstarConfig {
            budget: 4096 * 10,
            ..TstarConfig::default()
        };
        let s = tstar(&c, &EvenKernel::cos2(), Point::new(1.0, 0.0), cfg).unwrap();
        assert!(s.budget_exceeded);
        assert_eq!(s.values.len(), 10);
    }

    #[test]
    fn kernel_checks() {
        for r in 0..2 {
            for c in 0..2 {
                EvenKernel::biot_savart_entry(r, c).validate().unwrap();
                EvenKernel::KernelEntry {
                    spec: KernelSpec::grad_n(),
                    row: r,
                    col: c,
                }
                .validate()
                .unwrap();
            }
        }
        let mean = EvenKernel::Profile(vec![FourierTerm::new(0, 1.0, 0.0)]);
        assert!(mean.validate().is_err());
        let odd = EvenKernel::Profile(vec![FourierTerm::new(1, 1.0, 0.0)]);
        assert!(odd.validate().is_err());
        assert_eq!(
            EvenKernel::from_name("bs21").unwrap(),
            EvenKernel::biot_savart_entry(1, 0)
        );
        assert!(EvenKernel::from_name("bs31").is_err());
    }

    #[test]
    fn log_bound_arithmetic() {
        assert_eq!(log_bound_rhs(1.0, 1.0, 1.0), 1.0);
        assert!((log_bound_rhs(4.0, std::f64::consts::E / 2.0, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(log_bound_rhs(1.0, 0.1, 3.0), 3.0);
        let fit = fit_log_bound(&[(1.0, 1.0, 1.0), (3.0, 4.0, std::f64::consts::E / 2.0)]).unwrap();
        assert!((fit.envelope - 1.5).abs() < 1e-15);
        assert!((fit.least_squares - 7.0 / 5.0).abs() < 1e-14);
        assert!(fit.margins(fit.envelope).iter().all(|m| *m >= -1e-15));
    }
}
