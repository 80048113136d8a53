//! TOML run configuration. Unknown keys are errors and every constraint is
//! checked before anything is simulated.

use std::fmt;
use std::path::PathBuf;

use jumpdiff::cirjump::{mean_oracle, survival_oracle, CirJumpParams, Side};
use jumpdiff::sim::SimConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; `--seed` overrides it.
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Default path count of the simulation checks.
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Default z-threshold.
    #[serde(default = "default_z")]
    pub z: f64,
    /// Run every biased check at Δt and Δt/2 to fit ε; `--dt-halve` sets it.
    #[serde(default)]
    pub fit_epsilon: bool,
    pub model: ModelConfig,
    pub params: CirJumpParams,
    #[serde(default)]
    pub change: ChangeConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub plots: PlotConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub demo: DemoConfig,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckConfig>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("jumpdiff-out")
}
fn default_paths() -> u64 {
    100_000
}
fn default_z() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Square-root jump diffusion with killing, changed by `params`.
    CirJump,
    /// The same reference model, changed by the bump h.
    CdcDemo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// The function h of the cdc-demo family.
    #[serde(default)]
    pub h: Option<BumpConfig>,
}

/// A (1 − (x − center)²/width²)⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    Identity,
    /// The family's own change: the `tilde_*`, `m0`, `m1` parameters for
    /// cir-jump and h for cdc-demo.
    #[default]
    Builtin,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeConfig {
    #[serde(default)]
    pub kind: ChangeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    #[serde(default = "default_plot_paths")]
    pub paths: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_bins")]
    pub lambda_bins: usize,
}

fn default_plot_paths() -> u64 {
    10_000
}
fn default_grid_points() -> usize {
    10
}
fn default_bins() -> usize {
    40
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            paths: default_plot_paths(),
            grid_points: default_grid_points(),
            lambda_bins: default_bins(),
        }
    }
}

/// Log-spaced grid of states for the Λ integrand scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_scan_lo")]
    pub lo: f64,
    #[serde(default = "default_scan_hi")]
    pub hi: f64,
    #[serde(default = "default_scan_points")]
    pub points: usize,
}

fn default_scan_lo() -> f64 {
    1e-2
}
fn default_scan_hi() -> f64 {
    10.0
}
fn default_scan_points() -> usize {
    200
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lo: default_scan_lo(),
            hi: default_scan_hi(),
            points: default_scan_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    /// Random (f, g, x) triples for the Γ and 𝒜̃ identities.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    /// Paths of the pathwise density comparison.
    #[serde(default = "default_demo_paths")]
    pub paths: u64,
}

fn default_points() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-6
}
fn default_demo_paths() -> u64 {
    100
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            points: default_points(),
            tolerance: default_tol(),
            paths: default_demo_paths(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    IdentityDensity,
    DensityMass,
    ReweightedExpectation,
    Martingale,
    Girsanov,
    KillingCompensator,
    Supermartingale,
    Positivity,
    RatioBounds,
    EntropySign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Oracle,
    DirectQ,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    #[default]
    P,
    Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub kind: CheckKind,
    /// Report name; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    /// Defaults to the horizon.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub paths: Option<u64>,
    #[serde(default)]
    pub z: Option<f64>,
    /// density-mass and reweighted-expectation only.
    #[serde(default)]
    pub target: Option<TargetKind>,
    /// Replace the computed target; for exercising the failure path.
    #[serde(default)]
    pub target_override: Option<f64>,
    /// Test functions of martingale and girsanov; the first one is f for
    /// reweighted-expectation, which otherwise uses f(x) = x.
    #[serde(default)]
    pub bumps: Vec<BumpConfig>,
    /// Localisation level n; defaults to `sim.n_loc`.
    #[serde(default)]
    pub level: Option<u32>,
    /// Time points of supermartingale, evenly spaced up to t.
    #[serde(default)]
    pub grid_points: Option<usize>,
    /// Which model killing-compensator simulates.
    #[serde(default)]
    pub arm: Option<Arm>,
    /// Sample count of ratio-bounds and entropy-sign.
    #[serde(default)]
    pub samples: Option<u64>,
    /// identity-density tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl CheckConfig {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            CheckKind::IdentityDensity => "identity-density",
            CheckKind::DensityMass => "density-mass",
            CheckKind::ReweightedExpectation => "reweighted-expectation",
            CheckKind::Martingale => "martingale",
            CheckKind::Girsanov => "girsanov",
            CheckKind::KillingCompensator => "killing-compensator",
            CheckKind::Supermartingale => "supermartingale",
            CheckKind::Positivity => "positivity",
            CheckKind::RatioBounds => "ratio-bounds",
            CheckKind::EntropySign => "entropy-sign",
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind_name().to_string())
    }
}

/// Why a configuration was rejected.
#[derive(Debug)]
pub enum ConfigError {
    Syntax(String),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax(m) => write!(f, "config syntax error: {m}"),
            ConfigError::Invalid(v) => {
                writeln!(f, "config has {} error(s):", v.len())?;
                for e in v {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let errors = cfg.violations();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

impl RunConfig {
    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.params.violations().into_iter().map(|e| format!("params: {e}")).collect();
        if let Err(e) = self.sim.validate() {
            v.push(format!("sim: {e}"));
        }
        if !(self.z > 0.0) {
            v.push(format!("z must be > 0, got {}", self.z));
        }
        if self.paths < 2 {
            v.push(format!("paths must be >= 2, got {}", self.paths));
        }
        match (self.model.family, &self.model.h) {
            (Family::CdcDemo, None) => v.push("model: family cdc-demo needs model.h".into()),
            (Family::CirJump, Some(_)) => v.push("model: model.h is only used by family cdc-demo".into()),
            (_, Some(b)) => v.extend(bump_violations("model.h", b)),
            _ => {}
        }
        if self.plots.paths < 2 || self.plots.grid_points < 1 || self.plots.lambda_bins < 1 {
            v.push("plots: paths must be >= 2, grid_points and lambda_bins >= 1".into());
        }
        if !(self.scan.lo > 0.0 && self.scan.hi > self.scan.lo && self.scan.points >= 2) {
            v.push("scan: need 0 < lo < hi and points >= 2".into());
        }
        if self.demo.points < 1 || !(self.demo.tolerance > 0.0) || self.demo.paths < 1 {
            v.push("demo: points and paths must be >= 1 and tolerance > 0".into());
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = format!("check[{i}] ({})", c.kind_name());
            v.extend(self.check_violations(c).into_iter().map(|m| format!("{at}: {m}")));
        }
        v
    }

    fn check_violations(&self, c: &CheckConfig) -> Vec<String> {
        let mut v = Vec::new();
        let mut bad = |m: String| v.push(m);
        let t = c.t.unwrap_or(self.sim.horizon);
        let sim_ok = self.sim.validate().is_ok();
        let uses_time = !matches!(c.kind, CheckKind::RatioBounds | CheckKind::EntropySign);
        if uses_time && sim_ok {
            if !(t > 0.0 && t <= self.sim.horizon) {
                bad(format!("t = {t} must lie in (0, horizon = {}]", self.sim.horizon));
            } else if self.sim.grid_index(t).is_err() {
                bad(format!("t = {t} is not a multiple of dt = {}", self.sim.dt));
            }
        }
        if c.paths.is_some_and(|p| p < 2) {
            bad("paths must be >= 2".into());
        }
        if c.z.is_some_and(|z| !(z > 0.0)) {
            bad("z must be > 0".into());
        }
        if c.level == Some(0) {
            bad("level must be >= 1".into());
        }
        if c.target_override.is_some_and(|x| !x.is_finite()) {
            bad("target_override must be finite".into());
        }
        let takes_target = matches!(c.kind, CheckKind::DensityMass | CheckKind::ReweightedExpectation);
        if c.target.is_some() && !takes_target {
            bad("target applies to density-mass and reweighted-expectation only".into());
        }
        if takes_target && self.target_kind(c) == TargetKind::Oracle && self.oracle(c, t).is_none() {
            bad("no analytic oracle for this model and change; use target = \"direct-q\"".into());
        }
        let needs_bumps = matches!(c.kind, CheckKind::Martingale | CheckKind::Girsanov);
        if needs_bumps && c.bumps.is_empty() {
            bad("needs at least one entry in bumps".into());
        }
        if !needs_bumps && c.kind != CheckKind::ReweightedExpectation && !c.bumps.is_empty() {
            bad("bumps are not used by this check".into());
        }
        for (j, b) in c.bumps.iter().enumerate() {
            bump_violations(&format!("bumps[{j}]"), b).into_iter().for_each(&mut bad);
        }
        if c.grid_points.is_some() && c.kind != CheckKind::Supermartingale {
            bad("grid_points applies to supermartingale only".into());
        }
        if c.grid_points.is_some_and(|g| g < 2) {
            bad("grid_points must be >= 2".into());
        }
        if c.arm.is_some() && c.kind != CheckKind::KillingCompensator {
            bad("arm applies to killing-compensator only".into());
        }
        if c.samples.is_some() && !matches!(c.kind, CheckKind::RatioBounds | CheckKind::EntropySign) {
            bad("samples applies to ratio-bounds and entropy-sign only".into());
        }
        if c.samples == Some(0) {
            bad("samples must be >= 1".into());
        }
        if c.tolerance.is_some() && c.kind != CheckKind::IdentityDensity {
            bad("tolerance applies to identity-density only".into());
        }
        if c.tolerance.is_some_and(|x| !(x >= 0.0)) {
            bad("tolerance must be >= 0".into());
        }
        v
    }

    pub fn target_kind(&self, c: &CheckConfig) -> TargetKind {
        c.target.unwrap_or(TargetKind::Oracle)
    }

    /// The analytic target of density-mass or reweighted-expectation, when
    /// one exists for the configured model and change.
    pub fn oracle(&self, c: &CheckConfig, t: f64) -> Option<f64> {
        if self.model.family == Family::CdcDemo && self.change.kind == ChangeKind::Builtin {
            return None;
        }
        let side = match self.change.kind {
            ChangeKind::Identity => Side::P,
            ChangeKind::Builtin => Side::Q,
        };
        let surv = survival_oracle(&self.params, side, t).ok()?;
        match c.kind {
            CheckKind::DensityMass => Some(surv),
            CheckKind::ReweightedExpectation if c.bumps.is_empty() => {
                Some(mean_oracle(&self.params, side, t).ok()? * surv)
            }
            _ => None,
        }
    }
}

fn bump_violations(at: &str, b: &BumpConfig) -> Vec<String> {
    let mut v = Vec::new();
    if !(b.width > 0.0 && b.width.is_finite()) {
        v.push(format!("{at}: width must be > 0, got {}", b.width));
    }
    if !(b.center.is_finite() && b.amplitude.is_finite()) {
        v.push(format!("{at}: center and amplitude must be finite"));
    }
    v
}
