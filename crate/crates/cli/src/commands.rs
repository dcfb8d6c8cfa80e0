use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use patchflow::commutator::lemma3_check;
use patchflow::curve::Curve;
use patchflow::evolve::{fill_gronwall, gronwall_monitor, measure, run, GuardEvent, SimState};
use patchflow::extension::{jet_constant_verify, whitney_extend};
use patchflow::io::{
    read_curve_file, read_diagnostics_file, write_curve_file, write_diagnostics_file,
};
use patchflow::velocity::{EvenKernel, TstarConfig, TstarEvaluator};
use patchflow::{Error as CoreError, Point};
use serde::{Deserialize, Serialize};

use crate::cli::{Command, CurveSource, ShapeArg};
use crate::config::{
    parse_config, DiagnosticsConfig, KernelConfig, PresetName, ScenarioConfig, ShapeConfig,
    VariantName, DEFAULT_MARKERS,
};
use crate::plots::write_plot_script;
use crate::{Classify, ExitKind, Failure, Outcome, OUTPUT_ENV};

pub const MANIFEST: &str = "manifest.json";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const RECOMPUTED: &str = "diagnostics_recomputed.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub step: usize,
    /// Path relative to the run directory.
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    /// Smallest `C` with `q <= C exp(C int (1 + |grad v|))`; absent if none is finite.
    pub gronwall_constant: Option<f64>,
    pub gronwall_min_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ScenarioConfig,
    pub steps: usize,
    pub t_end: f64,
    pub guard_events: Vec<GuardEvent>,
    pub resample_events: Vec<f64>,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<SnapshotEntry>,
    pub fitted: FittedConstants,
}

pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Diagnose { run_dir, out } => diagnose(&run_dir, out),
        Command::VerifyLemma1 { source } => verify_lemma1(&source),
        Command::Extend {
            source,
            grid,
            margin,
            collar,
            min_depth,
            max_depth,
            out,
        } => {
            let mut src = resolve(&source)?;
            let d = &mut src.diagnostics;
            d.collar = collar.or(d.collar);
            d.min_depth = min_depth.unwrap_or(d.min_depth);
            d.max_depth = max_depth.unwrap_or(d.max_depth);
            d.validate().config_err()?;
            if grid < 2 || margin.is_nan() || margin < 0.0 {
                return Err(anyhow!("need --grid >= 2 and --margin >= 0")).config_err();
            }
            extend(&src, grid, margin, out.as_deref())
        }
        Command::CommutatorCheck {
            source,
            kernel,
            angular_nodes,
            gauss_order,
            stride,
            tolerance,
            out,
        } => {
            let mut src = resolve(&source)?;
            if let Some(expr) = kernel {
                src.kernel = Some(parse_kernel_expr(&expr).config_err()?);
            }
            let d = &mut src.diagnostics;
            d.angular_nodes = angular_nodes.unwrap_or(d.angular_nodes);
            d.gauss_order = gauss_order.unwrap_or(d.gauss_order);
            d.stride = stride.unwrap_or(d.stride);
            d.tolerance = tolerance.unwrap_or(d.tolerance);
            d.validate().config_err()?;
            commutator_check(&src, out.as_deref())
        }
        Command::Tstar {
            source,
            point,
            kernel_entry,
            eps_min,
            eps_max,
            n_eps,
            angular_nodes,
            budget,
            out,
        } => {
            let src = resolve(&source)?;
            let x = parse_point(&point).config_err()?;
            let kernel = EvenKernel::from_name(&kernel_entry).config_err()?;
            let config = TstarConfig {
                n_eps,
                eps_max,
                eps_min,
                angular_nodes,
                budget,
                ..TstarConfig::default()
            };
            tstar(&src, &kernel, x, config, out.as_deref())
        }
        Command::EmitPlots { run_dir } => {
            let manifest = read_manifest(&run_dir)?;
            let path = write_plot_script(&run_dir, &manifest).numeric_err()?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

/// Output directory: the flag, then the environment override, then the scenario.
fn output_dir(flag: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| config.output.directory.clone())
}

fn snapshot_name(step: usize, t: f64) -> String {
    format!("snapshot_{step:06}_t{t}.csv")
}

pub fn simulate(config_path: &Path, out: Option<PathBuf>) -> Outcome {
    let config = parse_config(config_path).config_err()?;
    let curve = config.curve().config_err()?;
    let spec = config.kernel().config_err()?;
    let run_config = config.run_config().config_err()?;
    let dir = output_dir(out, &config);
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))
        .with_context(|| format!("cannot create {}", dir.display()))
        .config_err()?;

    let output = run(SimState::new(curve, spec), &run_config).numeric_err()?;

    write_diagnostics_file(&dir.join(DIAGNOSTICS), &output.records).numeric_err()?;
    let mut snapshots = Vec::with_capacity(output.snapshots.len());
    for s in &output.snapshots {
        let file = Path::new(SNAPSHOT_DIR).join(snapshot_name(s.step, s.t));
        write_curve_file(&dir.join(&file), &s.curve).numeric_err()?;
        snapshots.push(SnapshotEntry {
            t: s.t,
            step: s.step,
            file,
        });
    }
    let fitted = match gronwall_monitor(&output.records) {
        Ok(r) if !r.infinite => FittedConstants {
            gronwall_constant: Some(r.constant),
            gronwall_min_margin: Some(r.min_margin()),
        },
        _ => FittedConstants {
            gronwall_constant: None,
            gronwall_min_margin: None,
        },
    };
    let state = &output.final_state;
    let manifest = Manifest {
        config,
        steps: state.step_count(),
        t_end: state.t(),
        guard_events: output.halt.iter().cloned().collect(),
        resample_events: state.resample_events().to_vec(),
        diagnostics: PathBuf::from(DIAGNOSTICS),
        snapshots,
        fitted,
    };
    write_json(&dir.join(MANIFEST), &manifest).numeric_err()?;
    if manifest.config.output.plot_script {
        write_plot_script(&dir, &manifest).numeric_err()?;
    }

    let first = output.records.first().map_or(f64::NAN, |r| r.area);
    let last = output.records.last().map_or(f64::NAN, |r| r.area);
    println!(
        "t = {} after {} steps; area {first} -> {last}; output in {}",
        manifest.t_end,
        manifest.steps,
        dir.display()
    );
    match output.halt {
        None => Ok(()),
        Some(event) => {
            let kind = if event.code.is_healthy_halt() {
                ExitKind::Guard
            } else {
                ExitKind::Numerical
            };
            Err(Failure {
                kind,
                error: anyhow!(
                    "run halted at t = {} (step {}): {:?}: {}",
                    event.t,
                    event.step,
                    event.code,
                    event.message
                ),
            })
        }
    }
}

fn read_manifest(run_dir: &Path) -> Outcome<Manifest> {
    let path = run_dir.join(MANIFEST);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))
        .config_err()?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid manifest {}", path.display()))
        .config_err()
}

pub fn diagnose(run_dir: &Path, out: Option<PathBuf>) -> Outcome {
    let manifest = read_manifest(run_dir)?;
    let config = &manifest.config;
    config.validate().config_err()?;
    let spec = config.kernel().config_err()?;
    let probes = config.diagnostics.probes();
    let gamma = config.diagnostics.gamma;
    if manifest.snapshots.is_empty() {
        return Err(anyhow!("the run kept no snapshots")).config_err();
    }

    let mut reference: Option<Curve> = None;
    let mut records = Vec::with_capacity(manifest.snapshots.len());
    for (k, s) in manifest.snapshots.iter().enumerate() {
        let curve = read_curve_file(&run_dir.join(&s.file), gamma)
            .with_context(|| format!("cannot load snapshot {}", s.file.display()))
            .config_err()?;
        if k == 0 || manifest.resample_events.contains(&s.t) {
            reference = Some(curve.clone());
        }
        let initial = reference.as_ref().expect("set at the first snapshot");
        records.push(measure(s.t, &curve, initial, &spec, probes).numeric_err()?);
    }
    fill_gronwall(&mut records);
    let dest = out.unwrap_or_else(|| run_dir.join(RECOMPUTED));
    write_diagnostics_file(&dest, &records).numeric_err()?;

    let stored = read_diagnostics_file(&run_dir.join(&manifest.diagnostics)).ok();
    if let Some(stored) = stored {
        let mut diff: f64 = 0.0;
        let mut matched = 0;
        for r in &records {
            if let Some(s) = stored.iter().find(|s| s.t == r.t) {
                matched += 1;
                for (a, b) in [
                    (r.area, s.area),
                    (r.b, s.b),
                    (r.holder, s.holder),
                    (r.q, s.q),
                    (r.sup_grad_v, s.sup_grad_v),
                    (r.max_speed, s.max_speed),
                    (r.area_flux, s.area_flux),
                ] {
                    diff = diff.max((a - b).abs());
                }
            }
        }
        println!(
            "{} records recomputed, {matched} matched stored records, max abs difference {diff:e}",
            records.len()
        );
    }
    println!("{}", dest.display());
    Ok(())
}

/// Shape, kernel and diagnostics settings for the one-off commands.
pub struct Resolved {
    pub shape: ShapeConfig,
    pub kernel: Option<KernelConfig>,
    pub diagnostics: DiagnosticsConfig,
}

impl Resolved {
    fn curve(&self) -> Outcome<Curve> {
        self.shape.build(self.diagnostics.gamma).config_err()
    }
}

pub fn resolve(source: &CurveSource) -> Outcome<Resolved> {
    let mut resolved = match &source.config {
        Some(path) => {
            let flags = [
                source.n.is_some(),
                source.radius.is_some(),
                source.a.is_some(),
                source.b.is_some(),
                source.epsilon.is_some(),
                source.m.is_some(),
            ];
            if flags.iter().any(|&f| f) {
                return Err(anyhow!("shape flags cannot be combined with --config")).config_err();
            }
            let config = parse_config(path).config_err()?;
            Resolved {
                shape: config.shape,
                kernel: Some(config.kernel),
                diagnostics: config.diagnostics,
            }
        }
        None => {
            let preset = match (source.shape, &source.curve) {
                (Some(ShapeArg::Circle), None) => PresetName::Circle,
                (Some(ShapeArg::Ellipse), None) => PresetName::Ellipse,
                (Some(ShapeArg::PerturbedCircle), None) => PresetName::PerturbedCircle,
                (None, Some(_)) => PresetName::File,
                _ => return Err(anyhow!("give one of --config, --shape or --curve")).config_err(),
            };
            Resolved {
                shape: ShapeConfig {
                    preset,
                    n: source.n.unwrap_or(DEFAULT_MARKERS),
                    radius: source.radius,
                    a: source.a,
                    b: source.b,
                    epsilon: source.epsilon,
                    m: source.m,
                    file: source.curve.clone(),
                },
                kernel: None,
                diagnostics: DiagnosticsConfig::default(),
            }
        }
    };
    if let Some(g) = source.gamma {
        resolved.diagnostics.gamma = g;
    }
    resolved.diagnostics.validate().config_err()?;
    resolved.shape.validate().config_err()?;
    Ok(resolved)
}

fn parse_point(s: &str) -> anyhow::Result<Point> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("--point expects `x,y`, got '{s}'");
    }
    let x = parts[0]
        .parse::<f64>()
        .with_context(|| format!("bad coordinate '{}'", parts[0]))?;
    let y = parts[1]
        .parse::<f64>()
        .with_context(|| format!("bad coordinate '{}'", parts[1]))?;
    Ok(Point::new(x, y))
}

/// Parses `name` or `w1*name1+w2*name2+...` with names `biot_savart`, `grad_n`.
pub fn parse_kernel_expr(expr: &str) -> anyhow::Result<KernelConfig> {
    let leaf = |name: &str, weight: Option<f64>| -> anyhow::Result<KernelConfig> {
        let variant = match name.trim() {
            "biot_savart" => VariantName::BiotSavart,
            "grad_n" => VariantName::GradN,
            other => bail!("unknown kernel '{other}' (expected biot_savart or grad_n)"),
        };
        Ok(KernelConfig {
            variant,
            strength: 1.0,
            weight,
            fourier: None,
            members: Vec::new(),
        })
    };
    let terms: Vec<&str> = expr.split('+').collect();
    if terms.len() == 1 && !expr.contains('*') {
        return leaf(expr, None);
    }
    let members = terms
        .iter()
        .map(|t| match t.split_once('*') {
            Some((w, name)) => {
                let w = w
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad weight in '{t}'"))?;
                leaf(name, Some(w))
            }
            None => leaf(t, Some(1.0)),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let config = KernelConfig {
        variant: VariantName::LinearCombination,
        strength: 1.0,
        weight: None,
        fourier: None,
        members,
    };
    config.validate("kernel", false)?;
    Ok(config)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => std::io::stdout().write_all(bytes).map_err(Into::into),
    }
    .numeric_err()
}

#[derive(Debug, Serialize)]
struct Lemma1Report {
    gamma: f64,
    n_markers: usize,
    empirical_sup: f64,
    holder_norm: f64,
    ratio: f64,
    bound: f64,
    status: &'static str,
}

pub fn verify_lemma1(source: &CurveSource) -> Outcome {
    let src = resolve(source)?;
    let curve = src.curve()?;
    let gamma = src.diagnostics.gamma;
    let (_, normal) = curve.tangent_normal().numeric_err()?;
    let report = match jet_constant_verify(&curve, &normal, gamma) {
        Ok(v) => Lemma1Report {
            gamma,
            n_markers: curve.n_markers(),
            empirical_sup: v.empirical_sup,
            holder_norm: v.holder_norm,
            ratio: v.ratio,
            bound: v.bound,
            status: "PASS",
        },
        Err(CoreError::JetBoundViolated { ratio, bound }) => {
            println!(
                "{}",
                serde_json::json!({ "ratio": ratio, "bound": bound, "status": "FAIL" })
            );
            return Err(anyhow!("ratio {ratio} exceeds the bound {bound}")).numeric_err();
        }
        Err(e) => return Err(e).numeric_err(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("plain data")
    );
    Ok(())
}

pub fn extend(src: &Resolved, grid: usize, margin: f64, out: Option<&Path>) -> Outcome {
    let curve = src.curve()?;
    let (tangent, _) = curve.tangent_normal().numeric_err()?;
    let ext = whitney_extend(&curve, &tangent, src.diagnostics.whitney()).numeric_err()?;

    let pts = curve.points();
    let pad = margin * curve.diameter();
    let lo = pts
        .iter()
        .fold(Point::repeat(f64::INFINITY), |m, p| m.inf(p))
        - Point::repeat(pad);
    let hi = pts
        .iter()
        .fold(Point::repeat(f64::NEG_INFINITY), |m, p| m.sup(p))
        + Point::repeat(pad);
    let h = 1e-8 * curve.diameter();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "phi", "gphi1", "gphi2", "g1", "g2", "divg_fd"])
        .numeric_err()?;
    let mut max_div: f64 = 0.0;
    for j in 0..grid {
        for i in 0..grid {
            let s = i as f64 / (grid - 1) as f64;
            let t = j as f64 / (grid - 1) as f64;
            let x = Point::new(lo.x + s * (hi.x - lo.x), lo.y + t * (hi.y - lo.y));
            let (phi, gphi) = ext.eval(x);
            let g = ext.field(x);
            let dx = Point::new(h, 0.0);
            let dy = Point::new(0.0, h);
            let div = (ext.field(x + dx).x - ext.field(x - dx).x + ext.field(x + dy).y
                - ext.field(x - dy).y)
                / (2.0 * h);
            max_div = max_div.max(div.abs());
            w.serialize([x.x, x.y, phi, gphi.x, gphi.y, g.x, g.y, div])
                .numeric_err()?;
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}")).numeric_err()?;
    emit(out, &bytes)?;
    eprintln!(
        "{} cubes, depth {}, max overlap {}, collar {}, max |div g| on grid {max_div:e}",
        ext.n_cubes(),
        ext.depth(),
        ext.max_overlap(),
        ext.collar()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct MarkerRow {
    index: usize,
    x: [f64; 2],
    direct: [f64; 2],
    commutator: [f64; 2],
    discrepancy: f64,
    area_error: f64,
}

#[derive(Debug, Serialize)]
struct CommutatorReport {
    kernel: KernelConfig,
    gamma: f64,
    n_markers: usize,
    angular_nodes: usize,
    gauss_order: usize,
    max_discrepancy: f64,
    tolerance: f64,
    passed: bool,
    fitted_constant: f64,
    commutator_holder: f64,
    tangent_holder: f64,
    sup_grad_v: f64,
    samples: Vec<MarkerRow>,
}

pub fn commutator_check(src: &Resolved, out: Option<&Path>) -> Outcome {
    let curve = src.curve()?;
    let kernel = src
        .kernel
        .clone()
        .unwrap_or_else(|| parse_kernel_expr("biot_savart").expect("valid expression"));
    let spec = kernel.build().config_err()?;
    let opts = src.diagnostics.lemma3();
    let r = lemma3_check(&curve, &spec, opts).numeric_err()?;
    let report = CommutatorReport {
        kernel,
        gamma: src.diagnostics.gamma,
        n_markers: curve.n_markers(),
        angular_nodes: opts.quadrature.angular_nodes,
        gauss_order: opts.quadrature.gauss_order,
        max_discrepancy: r.max_discrepancy,
        tolerance: r.tolerance,
        passed: r.passed,
        fitted_constant: r.fitted_constant,
        commutator_holder: r.commutator_holder,
        tangent_holder: r.tangent_holder,
        sup_grad_v: r.sup_grad_v,
        samples: r
            .samples
            .iter()
            .map(|s| {
                let x = curve.points()[s.index];
                MarkerRow {
                    index: s.index,
                    x: [x.x, x.y],
                    direct: [s.direct.x, s.direct.y],
                    commutator: [s.commutator.x, s.commutator.y],
                    discrepancy: s.discrepancy,
                    area_error: s.area_error,
                }
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report).numeric_err()?;
    text.push('\n');
    emit(out, text.as_bytes())?;
    if !r.passed {
        return Err(anyhow!(
            "max discrepancy {} exceeds the tolerance {}",
            r.max_discrepancy,
            r.tolerance
        ))
        .numeric_err();
    }
    Ok(())
}

pub fn tstar(
    src: &Resolved,
    kernel: &EvenKernel,
    x: Point,
    config: TstarConfig,
    out: Option<&Path>,
) -> Outcome {
    let curve = src.curve()?;
    let sweep = TstarEvaluator::new(&curve, config)
        .sweep(kernel, x)
        .or_exit(ExitKind::Config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "value", "running_sup"])
        .numeric_err()?;
    for ((e, v), s) in sweep
        .epsilons
        .iter()
        .zip(&sweep.values)
        .zip(&sweep.running_sup)
    {
        w.serialize([e, v, s]).numeric_err()?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}")).numeric_err()?;
    emit(out, &bytes)?;
    if sweep.budget_exceeded {
        eprintln!(
            "node budget exceeded: sweep stopped at epsilon = {}",
            sweep.epsilons.last().copied().unwrap_or(f64::NAN)
        );
    }
    eprintln!("T* estimate {}", sweep.sup());
    Ok(())
}
