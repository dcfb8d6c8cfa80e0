//! Time integration of the contour dynamics ODE `dX/dt = F(X)` on the
//! markers, with the Lagrangian diagnostics `b(t)`, `q(t)` and the monitor of
//! the a priori bound `q(t) <= C exp(C int_0^t (1 + |grad v|_inf) ds)`.

use serde::{Deserialize, Serialize};

use crate::curve::{
    arc_resample, bilipschitz_constant, holder_seminorm, Curve, VectorFieldOnCurve,
};
use crate::kernel::KernelSpec;
use crate::velocity::{
    check_runaway, normal_flux, sup_grad_velocity, velocity_on_markers, SupGradOptions,
};
use crate::{Error, Result};

/// Fraction of the smallest marker gap a marker may travel in one step.
pub const CFL_FRACTION: f64 = 0.25;

/// Marker positions at time `t` together with the frozen initial curve.
#[derive(Debug, Clone)]
pub struct SimState {
    t: f64,
    curve: Curve,
    initial: Curve,
    spec: KernelSpec,
    step_count: usize,
    resample_events: Vec<f64>,
}

impl SimState {
    pub fn new(curve: Curve, spec: KernelSpec) -> Self {
        Self {
            t: 0.0,
            initial: curve.clone(),
            curve,
            spec,
            step_count: 0,
            resample_events: Vec::new(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// The reference curve for `b` and `q`; replaced only by resampling.
    pub fn initial(&self) -> &Curve {
        &self.initial
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn resample_events(&self) -> &[f64] {
        &self.resample_events
    }

    /// The same state driven by the kernel with negated strength, which runs
    /// the autonomous flow backward in time.
    pub fn reversed(&self) -> Result<Self> {
        let spec = self.spec.clone().with_strength(-self.spec.strength())?;
        Ok(Self {
            spec,
            ..self.clone()
        })
    }

    /// Redistributes the markers uniformly in arclength and restarts the
    /// reference parametrization from the result.
    pub fn resample(&mut self, n_new: usize) -> Result<()> {
        self.curve = arc_resample(&self.curve, n_new)?;
        self.initial = self.curve.clone();
        self.resample_events.push(self.t);
        Ok(())
    }
}

/// `F(X)` at the markers of the state.
pub fn rhs(state: &SimState) -> VectorFieldOnCurve {
    velocity_on_markers(&state.curve, &state.spec)
}

/// Limits enforced by [`step_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGuards {
    pub cfl_fraction: f64,
    /// Largest admissible marker speed.
    pub runaway_speed: f64,
}

impl Default for StepGuards {
    fn default() -> Self {
        Self {
            cfl_fraction: CFL_FRACTION,
            runaway_speed: 1e6,
        }
    }
}

/// One classical RK4 step with the default guards.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    step_with(state, dt, StepGuards::default())
}

fn shifted(curve: &Curve, field: &VectorFieldOnCurve, h: f64) -> Result<Curve> {
    let pts = curve
        .points()
        .iter()
        .zip(&field.values)
        .map(|(p, v)| p + v * h)
        .collect();
    Curve::from_raw(pts, curve.gamma())
}

/// One classical RK4 step. Refuses the step if `dt * max_speed` exceeds the
/// guard fraction of the smallest marker gap, and fails if the new curve is
/// not simple.
pub fn step_with(state: &SimState, dt: f64, guards: StepGuards) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} is not positive")));
    }
    let spec = &state.spec;
    let x = &state.curve;
    let k1 = velocity_on_markers(x, spec);
    check_runaway(&k1, guards.runaway_speed)?;
    let speed = k1.max_norm();
    let room = guards.cfl_fraction * x.min_gap();
    if dt * speed >= room {
        return Err(Error::Cfl {
            lhs: dt * speed,
            rhs: room,
            suggested: 0.9 * room / speed,
        });
    }
    let k2 = velocity_on_markers(&shifted(x, &k1, 0.5 * dt)?, spec);
    check_runaway(&k2, guards.runaway_speed)?;
    let k3 = velocity_on_markers(&shifted(x, &k2, 0.5 * dt)?, spec);
    check_runaway(&k3, guards.runaway_speed)?;
    let k4 = velocity_on_markers(&shifted(x, &k3, dt)?, spec);
    check_runaway(&k4, guards.runaway_speed)?;

    let points = x
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let incr = k1.values[i] + 2.0 * k2.values[i] + 2.0 * k3.values[i] + k4.values[i];
            p + incr * (dt / 6.0)
        })
        .collect::<Vec<_>>();
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::param("state", "non-finite marker position"));
    }
    let curve = Curve::new(points, x.gamma())?;
    Ok(SimState {
        t: state.t + dt,
        curve,
        initial: state.initial.clone(),
        spec: state.spec.clone(),
        step_count: state.step_count + 1,
        resample_events: state.resample_events.clone(),
    })
}

/// One row of the diagnostics time series. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub area: f64,
    pub b: f64,
    /// Holder seminorm of `d/dtheta X(h(theta), t)` with the chordal distance.
    pub holder: f64,
    /// `holder / b^{1+gamma}`.
    pub q: f64,
    pub sup_grad_v: f64,
    pub max_speed: f64,
    /// `C0 exp(C0 int_0^t (1 + sup_grad_v))` with `C0 = max(1, q(0))`.
    pub gronwall_rhs: f64,
    /// `oint <v, n> dsigma`.
    pub area_flux: f64,
}

/// All diagnostics of `curve` at time `t` except `gronwall_rhs`, which depends
/// on the whole series and is set by [`fill_gronwall`] (NaN until then).
pub fn measure(
    t: f64,
    curve: &Curve,
    initial: &Curve,
    spec: &KernelSpec,
    probes: SupGradOptions,
) -> Result<DiagnosticsRecord> {
    let gamma = curve.gamma();
    let v = velocity_on_markers(curve, spec);
    let b = bilipschitz_constant(curve, initial)?;
    let holder = holder_seminorm(&curve.derivative(), gamma);
    Ok(DiagnosticsRecord {
        t,
        area: curve.area(),
        b,
        holder,
        q: holder / b.powf(1.0 + gamma),
        sup_grad_v: sup_grad_velocity(curve, spec, probes)?.value,
        max_speed: v.max_norm(),
        gronwall_rhs: f64::NAN,
        area_flux: normal_flux(curve, &v),
    })
}

/// `int_0^{t_k} (1 + sup_grad_v) ds` at every record by the trapezoid rule.
pub fn gronwall_integral(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let mut out = Vec::with_capacity(records.len());
    let mut acc = 0.0;
    for (k, r) in records.iter().enumerate() {
        if k > 0 {
            let p = &records[k - 1];
            acc += 0.5 * (r.t - p.t) * (2.0 + r.sup_grad_v + p.sup_grad_v);
        }
        out.push(acc);
    }
    out
}

/// Sets the `gronwall_rhs` column of a series.
pub fn fill_gronwall(records: &mut [DiagnosticsRecord]) {
    let Some(first) = records.first() else {
        return;
    };
    let c0 = first.q.max(1.0);
    let integral = gronwall_integral(records);
    for (r, i) in records.iter_mut().zip(integral) {
        r.gronwall_rhs = c0 * (c0 * i).exp();
    }
}

/// Result of [`gronwall_monitor`].
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    /// Smallest `C >= 1` with `q <= C exp(C I)` at every record.
    pub constant: f64,
    /// Set when no finite `C` up to the search limit works.
    pub infinite: bool,
    pub integral: Vec<f64>,
    /// `1 - q / (C exp(C I))` per record; negative values would be inversions.
    pub margins: Vec<f64>,
}

impl GronwallReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

const MAX_GRONWALL_C: f64 = 1e12;

/// Smallest `C >= 1` with `q <= C exp(C i)`, or `None` if it exceeds the
/// search limit.
fn minimal_constant(q: f64, i: f64) -> Option<f64> {
    let h = |c: f64| c * (c * i).exp();
    if q <= 1.0 * i.exp() {
        return Some(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while h(hi) < q {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_GRONWALL_C {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(hi)
}

/// Fits the constant of the a priori bound to a diagnostics series.
pub fn gronwall_monitor(records: &[DiagnosticsRecord]) -> Result<GronwallReport> {
    if records.is_empty() {
        return Err(Error::param("series", "empty diagnostics series"));
    }
    let integral = gronwall_integral(records);
    let finite = records
        .iter()
        .zip(&integral)
        .all(|(r, i)| r.q.is_finite() && i.is_finite());
    let mut constant: f64 = 1.0;
    let mut infinite = !finite;
    if finite {
        for (r, &i) in records.iter().zip(&integral) {
            match minimal_constant(r.q, i) {
                Some(c) => constant = constant.max(c),
                None => infinite = true,
            }
        }
    }
    if infinite {
        return Ok(GronwallReport {
            constant: f64::INFINITY,
            infinite,
            margins: vec![f64::NEG_INFINITY; records.len()],
            integral,
        });
    }
    let margins = records
        .iter()
        .zip(&integral)
        .map(|(r, &i)| 1.0 - r.q / (constant * (constant * i).exp()))
        .collect();
    Ok(GronwallReport {
        constant,
        infinite,
        integral,
        margins,
    })
}

/// `dA/dt` two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaRate {
    /// Centered difference of areas over RK4 probe steps `+-delta`.
    pub numeric: f64,
    /// `oint <v, n> dsigma`.
    pub flux: f64,
    /// `|numeric - flux|`.
    pub discrepancy: f64,
    /// `discrepancy / |area|`.
    pub relative: f64,
}

/// Compares the area rate from probe steps with the boundary flux. `delta`
/// defaults to `1e-3`, reduced if the step guard requires it.
pub fn area_rate_check(state: &SimState, delta: Option<f64>) -> Result<AreaRate> {
    let v = rhs(state);
    let flux = normal_flux(&state.curve, &v);
    let area = state.curve.area();
    let speed = v.max_norm();
    if speed == 0.0 {
        return Ok(AreaRate {
            numeric: 0.0,
            flux,
            discrepancy: flux.abs(),
            relative: if area != 0.0 {
                flux.abs() / area.abs()
            } else {
                0.0
            },
        });
    }
    let limit = 0.5 * CFL_FRACTION * state.curve.min_gap() / speed;
    let delta = delta.unwrap_or(1e-3).min(limit);
    let forward = step(state, delta)?;
    let backward = step(&state.reversed()?, delta)?;
    let numeric = (forward.curve.area() - backward.curve.area()) / (2.0 * delta);
    let discrepancy = (numeric - flux).abs();
    Ok(AreaRate {
        numeric,
        flux,
        discrepancy,
        relative: discrepancy / area.abs(),
    })
}

/// Why a run stopped early, in machine-readable form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardCode {
    Cfl,
    SelfIntersection,
    BilipschitzCollapse,
    Runaway,
    NonFinite,
}

impl GuardCode {
    /// Healthy early stops, as opposed to numerical failures.
    pub fn is_healthy_halt(self) -> bool {
        !matches!(self, GuardCode::NonFinite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardEvent {
    pub t: f64,
    pub step: usize,
    pub code: GuardCode,
    pub message: String,
}

/// Settings of [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Record diagnostics every this many steps (and at the end).
    pub record_every: usize,
    /// Keep snapshots every this many steps (and at the end); `None` keeps none.
    pub snapshot_every: Option<usize>,
    /// Resample in arclength every this many steps.
    pub resample_every: Option<usize>,
    /// Halt before `b` drops below this fraction of `b(0)`.
    pub b_floor: f64,
    pub guards: StepGuards,
    pub probes: SupGradOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_final: 1.0,
            record_every: 1,
            snapshot_every: None,
            resample_every: None,
            b_floor: 1e-3,
            guards: StepGuards::default(),
            probes: SupGradOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub curve: Curve,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub halt: Option<GuardEvent>,
    pub final_state: SimState,
}

fn guard_code(err: &Error) -> GuardCode {
    match err {
        Error::Cfl { .. } => GuardCode::Cfl,
        Error::NotSimple(_) => GuardCode::SelfIntersection,
        Error::Runaway { .. } => GuardCode::Runaway,
        _ => GuardCode::NonFinite,
    }
}

/// Integrates from `state` to `t_final`, recording diagnostics and snapshots.
/// Guard events stop the run and are returned in [`RunOutput::halt`] along
/// with everything recorded up to the last accepted step.
pub fn run(state: SimState, config: &RunConfig) -> Result<RunOutput> {
    if !(config.dt > 0.0 && config.t_final > 0.0) {
        return Err(Error::param("dt", "dt and t_final must be positive"));
    }
    if config.record_every == 0
        || config.snapshot_every == Some(0)
        || config.resample_every == Some(0)
    {
        return Err(Error::param("cadence", "cadences must be positive"));
    }
    let n_steps = ((config.t_final / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut state = state;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let b0 = bilipschitz_constant(&state.curve, &state.initial)?;
    let measure_now = |s: &SimState| measure(s.t, &s.curve, &s.initial, &s.spec, config.probes);

    records.push(measure_now(&state)?);
    if config.snapshot_every.is_some() {
        snapshots.push(Snapshot {
            t: state.t,
            step: 0,
            curve: state.curve.clone(),
        });
    }
    let mut halt = None;
    for k in 1..=n_steps {
        let dt = if k == n_steps {
            config.t_final - state.t
        } else {
            config.dt
        };
        let next = match step_with(&state, dt, config.guards) {
            Ok(s) => s,
            Err(e) => {
                halt = Some(GuardEvent {
                    t: state.t,
                    step: state.step_count,
                    code: guard_code(&e),
                    message: e.to_string(),
                });
                break;
            }
        };
        let b = bilipschitz_constant(&next.curve, &next.initial)?;
        if b < config.b_floor * b0 {
            halt = Some(GuardEvent {
                t: state.t,
                step: state.step_count,
                code: GuardCode::BilipschitzCollapse,
                message: format!("b would drop to {b:e}, below {} b(0)", config.b_floor),
            });
            break;
        }
        state = next;
        let mut resampled = false;
        if let Some(every) = config.resample_every {
            if k % every == 0 && k != n_steps {
                state.resample(state.curve.n_markers())?;
                resampled = true;
            }
        }
        if k % config.record_every == 0 || k == n_steps || resampled {
            records.push(measure_now(&state)?);
        }
        if let Some(every) = config.snapshot_every {
            if k % every == 0 || k == n_steps || resampled {
                snapshots.push(Snapshot {
                    t: state.t,
                    step: k,
                    curve: state.curve.clone(),
                });
            }
        }
    }
    fill_gronwall(&mut records);
    Ok(RunOutput {
        records,
        snapshots,
        halt,
        final_state: state,
    })
}
