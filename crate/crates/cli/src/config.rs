//! Scenario files: TOML with the sections `shape`, `kernel`, `evolution`,
//! `diagnostics` and `output`. Unknown keys are rejected everywhere.
//!
//! ```toml
//! [shape]
//! preset = "ellipse"   # circle | ellipse | perturbed_circle | file
//! a = 2.0
//! b = 1.0
//! n = 256
//!
//! [kernel]
//! variant = "biot_savart"   # biot_savart | grad_n | angular_fourier | linear_combination
//! strength = 1.0
//!
//! [evolution]
//! dt = 5e-3
//! t_final = 1.0
//! record_every = 10
//! snapshot_every = 10
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use patchflow::commutator::{Lemma3Options, QuadratureOptions};
use patchflow::curve::{preset_shape, Curve, Shape};
use patchflow::evolve::{RunConfig, StepGuards, CFL_FRACTION};
use patchflow::extension::WhitneyOptions;
use patchflow::io::read_curve_file;
use patchflow::kernel::{odd_harmonic_terms, KernelSpec};
use patchflow::velocity::SupGradOptions;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MARKERS: usize = 128;
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Circle,
    Ellipse,
    PerturbedCircle,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub preset: PresetName,
    #[serde(default = "default_markers")]
    pub n: usize,
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub epsilon: Option<f64>,
    pub m: Option<u32>,
    /// Curve CSV for `preset = "file"`, relative to the scenario file.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    BiotSavart,
    GradN,
    AngularFourier,
    LinearCombination,
}

/// Odd-harmonic coefficients listed for harmonics 1, 3, 5, ...
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    #[serde(default)]
    pub c1cos: Vec<f64>,
    #[serde(default)]
    pub c1sin: Vec<f64>,
    #[serde(default)]
    pub c2cos: Vec<f64>,
    #[serde(default)]
    pub c2sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub variant: VariantName,
    #[serde(default = "one")]
    pub strength: f64,
    /// Only meaningful inside `members`.
    pub weight: Option<f64>,
    pub fourier: Option<FourierConfig>,
    #[serde(default)]
    pub members: Vec<KernelConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
    pub resample_every: Option<usize>,
    #[serde(default = "default_b_floor")]
    pub b_floor: f64,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    #[serde(default = "default_runaway")]
    pub runaway_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Off-curve probe distance in units of the smallest marker gap.
    #[serde(default = "default_probe_spacings")]
    pub probe_spacings: f64,
    #[serde(default = "yes")]
    pub tangential: bool,
    #[serde(default = "default_angular_nodes")]
    pub angular_nodes: usize,
    #[serde(default = "default_gauss_order")]
    pub gauss_order: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub collar: Option<f64>,
    #[serde(default = "default_min_depth")]
    pub min_depth: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            probe_spacings: default_probe_spacings(),
            tangential: true,
            angular_nodes: default_angular_nodes(),
            gauss_order: default_gauss_order(),
            stride: default_stride(),
            tolerance: default_tolerance(),
            collar: None,
            min_depth: default_min_depth(),
            max_depth: default_max_depth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Also write a gnuplot script next to the CSVs.
    #[serde(default)]
    pub plot_script: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            plot_script: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub shape: ShapeConfig,
    pub kernel: KernelConfig,
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_markers() -> usize {
    DEFAULT_MARKERS
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_b_floor() -> f64 {
    1e-3
}
fn default_cfl() -> f64 {
    CFL_FRACTION
}
fn default_runaway() -> f64 {
    1e6
}
fn default_probe_spacings() -> f64 {
    SupGradOptions::default().probe_spacings
}
fn default_angular_nodes() -> usize {
    QuadratureOptions::default().angular_nodes
}
fn default_gauss_order() -> usize {
    QuadratureOptions::default().gauss_order
}
fn default_stride() -> usize {
    Lemma3Options::default().stride
}
fn default_tolerance() -> f64 {
    Lemma3Options::default().tolerance
}
fn default_min_depth() -> usize {
    WhitneyOptions::default().min_depth
}
fn default_max_depth() -> usize {
    WhitneyOptions::default().max_depth
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

/// Reads, parses and validates a scenario file. Relative curve paths are
/// resolved against the file's directory.
pub fn parse_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut config =
        parse_config_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(file) = &config.shape.file {
        if file.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.shape.file = Some(base.join(file));
        }
    }
    Ok(config)
}

pub fn parse_config_str(text: &str) -> anyhow::Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

fn positive(key: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{key} = {v} is out of range: must be positive");
    }
    Ok(())
}

fn require<T: Copy>(key: &str, v: Option<T>) -> anyhow::Result<T> {
    v.with_context(|| format!("missing key {key}"))
}

impl ShapeConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        let allowed: &[&str] = match self.preset {
            PresetName::Circle => &["radius"],
            PresetName::Ellipse => &["a", "b"],
            PresetName::PerturbedCircle => &["epsilon", "m"],
            PresetName::File => &["file"],
        };
        let given = [
            ("radius", self.radius.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("epsilon", self.epsilon.is_some()),
            ("m", self.m.is_some()),
            ("file", self.file.is_some()),
        ];
        for (key, present) in given {
            if present && !allowed.contains(&key) {
                bail!("shape.{key} is not a parameter of preset {:?}", self.preset);
            }
        }
        if self.n < 8 {
            bail!(
                "shape.n = {} is out of range: need at least 8 markers",
                self.n
            );
        }
        if self.preset == PresetName::File && self.file.is_none() {
            bail!("missing key shape.file");
        }
        // parameter ranges are checked when the curve is built
        self.shape().map(|_| ())
    }

    fn shape(&self) -> anyhow::Result<Option<Shape>> {
        Ok(Some(match self.preset {
            PresetName::Circle => Shape::Circle {
                radius: self.radius.unwrap_or(1.0),
            },
            PresetName::Ellipse => Shape::Ellipse {
                a: require("shape.a", self.a)?,
                b: require("shape.b", self.b)?,
            },
            PresetName::PerturbedCircle => Shape::PerturbedCircle {
                epsilon: require("shape.epsilon", self.epsilon)?,
                m: require("shape.m", self.m)?,
            },
            PresetName::File => return Ok(None),
        }))
    }

    pub fn build(&self, gamma: f64) -> anyhow::Result<Curve> {
        match self.shape()? {
            Some(shape) => Ok(preset_shape(shape, self.n, gamma)?),
            None => {
                let file = self.file.as_ref().context("missing key shape.file")?;
                read_curve_file(file, gamma)
                    .with_context(|| format!("cannot load curve {}", file.display()))
            }
        }
    }
}

impl KernelConfig {
    pub fn validate(&self, key: &str, nested: bool) -> anyhow::Result<()> {
        if !self.strength.is_finite() {
            bail!(
                "{key}.strength = {} is out of range: must be finite",
                self.strength
            );
        }
        match (nested, self.weight) {
            (false, Some(_)) => bail!("{key}.weight is only allowed inside kernel.members"),
            (true, None) => bail!("missing key {key}.weight"),
            _ => {}
        }
        if self.fourier.is_some() != (self.variant == VariantName::AngularFourier) {
            bail!("{key}.fourier must be given exactly for variant angular_fourier");
        }
        if !self.members.is_empty() && self.variant != VariantName::LinearCombination {
            bail!("{key}.members is only allowed for variant linear_combination");
        }
        for (i, m) in self.members.iter().enumerate() {
            m.validate(&format!("{key}.members[{i}]"), true)?;
        }
        self.build().map(|_| ())
    }

    pub fn build(&self) -> anyhow::Result<KernelSpec> {
        let spec = match self.variant {
            VariantName::BiotSavart => KernelSpec::biot_savart(),
            VariantName::GradN => KernelSpec::grad_n(),
            VariantName::AngularFourier => {
                let f = self.fourier.clone().unwrap_or_default();
                KernelSpec::angular_fourier(
                    odd_harmonic_terms(&f.c1cos, &f.c1sin),
                    odd_harmonic_terms(&f.c2cos, &f.c2sin),
                )?
            }
            VariantName::LinearCombination => KernelSpec::linear_combination(
                self.members
                    .iter()
                    .map(|m| Ok((m.weight.unwrap_or(1.0), m.build()?)))
                    .collect::<anyhow::Result<_>>()?,
            )?,
        };
        Ok(spec.with_strength(self.strength)?)
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        positive("evolution.dt", self.dt)?;
        positive("evolution.t_final", self.t_final)?;
        positive("evolution.cfl_fraction", self.cfl_fraction)?;
        positive("evolution.runaway_speed", self.runaway_speed)?;
        if !(0.0..1.0).contains(&self.b_floor) {
            bail!(
                "evolution.b_floor = {} is out of range: must lie in [0, 1)",
                self.b_floor
            );
        }
        for (key, v) in [
            ("record_every", Some(self.record_every)),
            ("snapshot_every", self.snapshot_every),
            ("resample_every", self.resample_every),
        ] {
            if v == Some(0) {
                bail!("evolution.{key} = 0 is out of range: must be positive");
            }
        }
        Ok(())
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            bail!(
                "diagnostics.gamma = {} is out of range: must lie in (0, 1)",
                self.gamma
            );
        }
        positive("diagnostics.probe_spacings", self.probe_spacings)?;
        positive("diagnostics.tolerance", self.tolerance)?;
        if let Some(c) = self.collar {
            positive("diagnostics.collar", c)?;
        }
        if self.angular_nodes < 16 {
            bail!(
                "diagnostics.angular_nodes = {} is out of range: need at least 16",
                self.angular_nodes
            );
        }
        if self.gauss_order == 0 || self.stride == 0 {
            bail!("diagnostics.gauss_order and diagnostics.stride must be positive");
        }
        if self.min_depth > self.max_depth || self.max_depth > 24 {
            bail!(
                "diagnostics.min_depth = {} / max_depth = {} out of range: need min <= max <= 24",
                self.min_depth,
                self.max_depth
            );
        }
        Ok(())
    }

    pub fn probes(&self) -> SupGradOptions {
        SupGradOptions {
            probe_spacings: self.probe_spacings,
            tangential: self.tangential,
        }
    }

    pub fn whitney(&self) -> WhitneyOptions {
        WhitneyOptions {
            collar: self.collar,
            min_depth: self.min_depth,
            max_depth: self.max_depth,
            ..WhitneyOptions::default()
        }
    }

    pub fn lemma3(&self) -> Lemma3Options {
        Lemma3Options {
            stride: self.stride,
            tolerance: self.tolerance,
            quadrature: QuadratureOptions {
                angular_nodes: self.angular_nodes,
                gauss_order: self.gauss_order,
                ..QuadratureOptions::default()
            },
            whitney: self.whitney(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.diagnostics.validate()?;
        self.shape.validate()?;
        self.kernel.validate("kernel", false)?;
        if let Some(e) = &self.evolution {
            e.validate()?;
        }
        Ok(())
    }

    pub fn curve(&self) -> anyhow::Result<Curve> {
        self.shape.build(self.diagnostics.gamma)
    }

    pub fn kernel(&self) -> anyhow::Result<KernelSpec> {
        self.kernel.build()
    }

    pub fn run_config(&self) -> anyhow::Result<RunConfig> {
        let e = self
            .evolution
            .as_ref()
            .context("missing section [evolution]")?;
        Ok(RunConfig {
            dt: e.dt,
            t_final: e.t_final,
            record_every: e.record_every,
            snapshot_every: e.snapshot_every,
            resample_every: e.resample_every,
            b_floor: e.b_floor,
            guards: StepGuards {
                cfl_fraction: e.cfl_fraction,
                runaway_speed: e.runaway_speed,
            },
            probes: self.diagnostics.probes(),
        })
    }
}
