//! Batch runs from a JSON configuration.
//!
//! A run builds the potential, probes its geometry, resolves the `auto`
//! settings, and then validates, solves, diagnoses and evolves according to
//! its [`Mode`]. The outcome is a [`Report`] whose [`checks`](Report::checks)
//! decide the overall pass and the process exit code.
//!
//! ```json
//! {
//!   "potential": { "name": "nagumo", "params": { "a": 0.25 } },
//!   "grid": { "M": 24, "h": 0.01 },
//!   "constraint": { "L": 8, "r0": "auto", "alpha": "auto" },
//!   "speed": { "tol_c": "auto", "tol_E": 1e-5 },
//!   "outputs": { "report": "report.json", "profile": "wave.csv", "plot": "wave.svg" },
//!   "seed_rng": 7
//! }
//! ```

mod plot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::action::ActionValue;
use crate::constrained::MinimizeResult;
use crate::diagnostics::{lambda_alpha_minus_bound, lambda_alpha_plus_bound, verify_wave_seeded, WaveReport};
use crate::grid::{make_grid, Profile};
use crate::potential::{
    geometry_probe, make_builtin, polynomial_potential, GeometryReport, HypothesisFlags, Omega, PotentialSpec, ProbeBox,
    ReflectionInfo,
};
use crate::semiflow::{run_semiflow, step_datum, FrontTrace, SemiflowOptions, SemiflowState};
use crate::speed::{
    min_action, resolve_hypotheses, solve_speed, speed_bounds, uniqueness_check, ReflectionOutcome, SpeedBracket,
    SpeedOptions, TracePoint, UniquenessCheck,
};
use crate::{Error, Result};

pub use plot::{emit_plot, render_svg};

/// Exit status of a run that passed every check.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_CHECKS_FAILED: i32 = 5;

/// Speed below `c*` at which the membership check is made, as a fraction.
pub const MEMBERSHIP_FRACTION: f64 = 0.8;
/// The action there must lie below minus this.
pub const MEMBERSHIP_MARGIN: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Validate,
    Solve,
    Semiflow,
    All,
}

/// A number or the keyword `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    Value(f64),
    Auto,
}

#[derive(Serialize, Deserialize)]
enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SettingRepr {
    Value(f64),
    Auto(AutoKeyword),
}

impl Serialize for Setting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Setting::Value(v) => SettingRepr::Value(v),
            Setting::Auto => SettingRepr::Auto(AutoKeyword::Auto),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SettingRepr::deserialize(d)
            .map(|r| match r {
                SettingRepr::Value(v) => Setting::Value(v),
                SettingRepr::Auto(_) => Setting::Auto,
            })
            .map_err(|_| serde::de::Error::custom("expected a number or \"auto\""))
    }
}

impl Setting {
    fn value(self) -> Option<f64> {
        match self {
            Setting::Value(v) => Some(v),
            Setting::Auto => None,
        }
    }
}

/// A builtin by name or a polynomial coefficient file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PotentialConfig {
    Builtin {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    File {
        /// Relative paths are taken from the directory of the config file.
        file: PathBuf,
        a_plus: Vec<f64>,
        a_minus: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "M")]
    pub m: Setting,
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            m: Setting::Value(24.0),
            h: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintConfig {
    #[serde(rename = "L")]
    pub l: Setting,
    pub r0: Setting,
    pub alpha: Setting,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        ConstraintConfig {
            l: Setting::Value(8.0),
            r0: Setting::Auto,
            alpha: Setting::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedConfig {
    /// `auto` is `1e-4 c_max`.
    pub tol_c: Setting,
    #[serde(rename = "tol_E")]
    pub tol_e: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        SpeedConfig {
            tol_c: Setting::Auto,
            tol_e: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub resolution: usize,
    /// Defaults to the inflated bounding box of the minima.
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub probe_box: Option<ProbeBox>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            resolution: 401,
            probe_box: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiflowConfig {
    #[serde(rename = "M")]
    pub m: f64,
    pub h: f64,
    /// Defaults to `0.4 h²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_final: f64,
    pub samples: usize,
}

impl Default for SemiflowConfig {
    fn default() -> Self {
        SemiflowConfig {
            m: 40.0,
            h: 0.05,
            dt: None,
            t_final: 40.0,
            samples: 200,
        }
    }
}

/// Output file names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report: PathBuf,
    pub profile: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
    /// Front positions `t,front_x` of the semiflow.
    pub front: PathBuf,
    /// Terminal field of the semiflow.
    pub terminal: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: "report.json".into(),
            profile: "profile.csv".into(),
            plot: None,
            front: "front.csv".into(),
            terminal: "semiflow_profile.csv".into(),
        }
    }
}

/// One run, as read from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub constraint: ConstraintConfig,
    #[serde(default)]
    pub speed: SpeedConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    /// Box or ball for the reflection path when (h*) fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Omega>,
    #[serde(default)]
    pub semiflow: SemiflowConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Seed of every sampled check.
    #[serde(default)]
    pub seed_rng: u64,
    /// Record wall-clock timings in the report, which then differs between
    /// runs.
    #[serde(default)]
    pub timings: bool,
}

fn default_mode() -> Mode {
    Mode::Solve
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rejects non-positive tolerances and lengths.
    pub fn check(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(Error::Config(format!("{name} = {v} must be positive and finite")))
            }
            _ => Ok(()),
        };
        positive("grid.M", self.grid.m.value())?;
        positive("grid.h", Some(self.grid.h))?;
        positive("constraint.L", self.constraint.l.value())?;
        positive("constraint.r0", self.constraint.r0.value())?;
        positive("speed.tol_c", self.speed.tol_c.value())?;
        positive("speed.tol_E", Some(self.speed.tol_e))?;
        positive("semiflow.M", Some(self.semiflow.m))?;
        positive("semiflow.h", Some(self.semiflow.h))?;
        positive("semiflow.t_final", Some(self.semiflow.t_final))?;
        positive("semiflow.dt", self.semiflow.dt)?;
        if let Some(a) = self.constraint.alpha.value() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("constraint.alpha = {a} must be >= 0")));
            }
        }
        if let Some(o) = &self.omega {
            o.validate()?;
        }
        Ok(())
    }
}

/// Settings after the `auto` policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub r0: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub h: f64,
    pub tol_c: f64,
    #[serde(rename = "tol_E")]
    pub tol_e: f64,
    /// `Λ_{α,-} + Λ_{α,+}` at `c_max`, when both are finite.
    pub lambda_estimate: Option<f64>,
    pub bracket: SpeedBracket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSummary {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub w_at_a_minus: f64,
    pub reflection: Option<ReflectionInfo>,
}

impl From<&PotentialSpec> for PotentialSummary {
    fn from(p: &PotentialSpec) -> Self {
        PotentialSummary {
            name: p.name.clone(),
            params: p.params.clone(),
            dim: p.dim,
            a_plus: p.a_plus.clone(),
            a_minus: p.a_minus.clone(),
            w_at_a_minus: p.w_at_a_minus,
            reflection: p.reflection.clone(),
        }
    }
}

/// The parts of a [`MinimizeResult`] that go into a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeSummary {
    pub action: ActionValue,
    pub iterations: usize,
    pub converged: bool,
    pub stagnated: bool,
    pub rim_contact_minus: bool,
    pub rim_contact_plus: bool,
    pub lambda_minus: Option<f64>,
    pub lambda_alpha_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub grad_norm: f64,
    pub max_violation: f64,
}

impl From<&MinimizeResult> for MinimizeSummary {
    fn from(r: &MinimizeResult) -> Self {
        MinimizeSummary {
            action: r.action,
            iterations: r.iterations,
            converged: r.converged,
            stagnated: r.stagnated,
            rim_contact_minus: r.rim_contact_minus,
            rim_contact_plus: r.rim_contact_plus,
            lambda_minus: r.lambda_minus(),
            lambda_alpha_minus: r.lambda_alpha_minus(),
            lambda_plus: r.lambda_plus(),
            grad_norm: r.grad_norm,
            max_violation: r.max_violation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub c_star: f64,
    pub action_at_c_star: f64,
    pub bracket: SpeedBracket,
    pub c_lo: f64,
    pub c_hi: f64,
    pub c_mid: f64,
    pub refine_steps: usize,
    #[serde(rename = "L_used")]
    pub l_used: f64,
    #[serde(rename = "M_used")]
    pub m_used: f64,
    pub tol_c: f64,
    #[serde(rename = "tol_E")]
    pub tol_e: f64,
    pub rim_free: bool,
    pub recenter_shift: i64,
    pub confirmation: MinimizeSummary,
    pub trace: Vec<TracePoint>,
    pub reflection: Option<ReflectionOutcome>,
    /// Minimized action at `0.8 c*`.
    pub membership_action: f64,
}

/// The confirmed wave, stored so that a report can be plotted on its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveBlock {
    pub h: f64,
    pub left: f64,
    /// One array per component.
    pub components: Vec<Vec<f64>>,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub rim: f64,
    pub lambda_minus: Option<f64>,
    pub lambda_alpha_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
}

impl WaveBlock {
    fn new(u: &Profile, p: &PotentialSpec, rim: f64, r: &MinimizeResult) -> Self {
        WaveBlock {
            h: u.grid.h,
            left: u.grid.left,
            components: (0..u.dim).map(|i| u.component(i)).collect(),
            a_plus: p.a_plus.clone(),
            a_minus: p.a_minus.clone(),
            rim,
            lambda_minus: r.lambda_minus(),
            lambda_alpha_minus: r.lambda_alpha_minus(),
            lambda_plus: r.lambda_plus(),
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.left + j as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First crossing of component 1 through `(a⁺₁ + a⁻₁)/2`, by linear
    /// interpolation.
    pub fn midlevel_crossing(&self) -> Option<f64> {
        let u = self.components.first()?;
        let mid = 0.5 * (self.a_plus[0] + self.a_minus[0]);
        u.windows(2).enumerate().find_map(|(j, w)| {
            let (f0, f1) = (w[0] - mid, w[1] - mid);
            (f0 == 0.0 || f0 * f1 < 0.0).then(|| self.x(j) + self.h * f0 / (f0 - f1))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiflowSummary {
    #[serde(rename = "M")]
    pub m: f64,
    pub h: f64,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub window_shifts: usize,
    pub energy_increases: usize,
    pub max_energy_change: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub trace: FrontTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Hypothesis,
    Convergence,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "==",
        })
    }
}

/// `value relation threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, kind: CheckKind, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Le => value <= threshold,
            Relation::Lt => value < threshold,
            Relation::Ge => value >= threshold,
            Relation::Gt => value > threshold,
            Relation::Eq => value == threshold,
        };
        Check {
            name: name.to_string(),
            kind,
            value,
            relation,
            threshold,
            pass,
        }
    }

    fn flag(name: &str, kind: CheckKind, ok: bool) -> Self {
        Check::new(name, kind, if ok { 1.0 } else { 0.0 }, Relation::Eq, 1.0)
    }
}

/// Everything a run produced, as written to the report file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub hetwave_version: String,
    pub config: RunConfig,
    pub potential: PotentialSummary,
    pub resolved: Option<Resolved>,
    pub geometry: Option<GeometryReport>,
    /// Flags of the original potential when its reflection was solved.
    pub unreflected_flags: Option<HypothesisFlags>,
    pub speed: Option<SpeedSummary>,
    pub diagnostics: Option<WaveReport>,
    pub uniqueness: Option<UniquenessCheck>,
    pub wave: Option<WaveBlock>,
    pub semiflow: Option<SemiflowSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Seconds per stage, present only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else if self.failed_checks().any(|c| c.kind == CheckKind::Hypothesis) {
            EXIT_HYPOTHESIS
        } else if self.failed_checks().any(|c| c.kind == CheckKind::Convergence) {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_CHECKS_FAILED
        }
    }
}

/// Exit status for a run that ended in an error.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        Error::Hypothesis { .. } => EXIT_HYPOTHESIS,
        Error::Bisection(_) | Error::BlowUp { .. } | Error::Front(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

/// A report together with the profiles that go to CSV.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub wave: Option<Profile>,
    pub terminal: Option<Profile>,
}

/// Builds the potential of `cfg`; relative file paths start at `base`.
pub fn build_potential(cfg: &PotentialConfig, base: &Path) -> Result<PotentialSpec> {
    match cfg {
        PotentialConfig::Builtin { name, params } => make_builtin(name, params),
        PotentialConfig::File { file, a_plus, a_minus } => {
            polynomial_potential(&base.join(file), a_plus.clone(), a_minus.clone())
        }
    }
}

struct Timer {
    on: bool,
    start: Instant,
    marks: BTreeMap<String, f64>,
}

impl Timer {
    fn lap(&mut self, stage: &str) {
        if self.on {
            let t = self.start.elapsed().as_secs_f64();
            let before: f64 = self.marks.values().sum();
            self.marks.insert(stage.to_string(), t - before);
        }
    }
}

/// Probes at the configured `r0` and `α`, or resolves them: `r0 =
/// min(r0_max/2, |a⁺ - a⁻|/10)` and `α = ᾱ₀/2`.
fn probe(p: &PotentialSpec, cfg: &RunConfig) -> Result<GeometryReport> {
    let bx = cfg.probe.probe_box.as_ref();
    let res = cfg.probe.resolution;
    let sep = p.separation();
    let r0 = match cfg.constraint.r0.value() {
        Some(r0) => r0,
        None => {
            let first = geometry_probe(p, 0.0, sep / 10.0, bx, res)?;
            let r0_max = if first.r0_max > 0.0 { first.r0_max } else { sep / 5.0 };
            (r0_max / 2.0).min(sep / 10.0)
        }
    };
    let alpha = match cfg.constraint.alpha.value() {
        Some(a) => a,
        None => geometry_probe(p, 0.0, r0, bx, res)?.alpha_bar0 / 2.0,
    };
    geometry_probe(p, alpha, r0, bx, res)
}

/// `L = ⌈Λ⌉ + 2` and `M = L + 4Λ` where `auto`, with `M` rounded up to the
/// grid and capped by the weight guard at `c_max`.
fn resolve(cfg: &RunConfig, p: &PotentialSpec, geo: &GeometryReport) -> Result<Resolved> {
    let bracket = speed_bounds(p, geo)?;
    let c = bracket.c_max;
    let lambda_estimate = lambda_alpha_minus_bound(geo, c)
        .zip(lambda_alpha_plus_bound(p.depth(), c, geo.alpha))
        .map(|(a, b)| a + b)
        .filter(|v| v.is_finite());
    let need = |what: &str| {
        lambda_estimate.ok_or_else(|| {
            Error::Config(format!(
                "{what} = \"auto\" needs finite Λ bounds (w* > 0 and alpha > 0)"
            ))
        })
    };
    let h = cfg.grid.h;
    let l = match cfg.constraint.l.value() {
        Some(l) => l,
        None => need("constraint.L")?.ceil() + 2.0,
    };
    let m = match cfg.grid.m.value() {
        Some(m) => m,
        None => {
            let half = h / 2.0;
            let cap = l + 450.0 / c;
            let m = (l + 4.0 * need("grid.M")?).min(cap);
            (m / half).ceil() * half
        }
    };
    Ok(Resolved {
        r0: geo.r0,
        alpha: geo.alpha,
        l,
        m,
        h,
        tol_c: cfg.speed.tol_c.value().unwrap_or(1e-4 * c),
        tol_e: cfg.speed.tol_e,
        lambda_estimate,
        bracket,
    })
}

fn hypothesis_checks(geo: &GeometryReport, reflection: Option<&ReflectionInfo>, checks: &mut Vec<Check>) {
    let f = &geo.hypothesis_flags;
    for (name, ok) in [
        ("hypothesis_h", f.h),
        ("hypothesis_h_star_1", f.h_star_1),
        ("hypothesis_h_star_2", f.h_star_2),
    ] {
        checks.push(Check::flag(name, CheckKind::Hypothesis, ok));
    }
    if let Some(r) = reflection {
        checks.push(Check::flag("reflection_premise", CheckKind::Hypothesis, r.premise_ok));
    }
}

/// Runs the pipeline of `cfg.mode`. Relative potential files resolve
/// against `base`.
pub fn run(cfg: &RunConfig, base: &Path) -> Result<RunOutput> {
    cfg.check()?;
    let mut timer = Timer {
        on: cfg.timings,
        start: Instant::now(),
        marks: BTreeMap::new(),
    };
    let p = build_potential(&cfg.potential, base)?;
    let mut report = Report {
        hetwave_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        potential: PotentialSummary::from(&p),
        resolved: None,
        geometry: None,
        unreflected_flags: None,
        speed: None,
        diagnostics: None,
        uniqueness: None,
        wave: None,
        semiflow: None,
        checks: Vec::new(),
        pass: false,
        timings: None,
    };
    let mut out = RunOutput {
        report: report.clone(),
        wave: None,
        terminal: None,
    };
    let mut solved = p.clone();
    let mut c_star = None;

    if cfg.mode != Mode::Semiflow {
        let geo = probe(&p, cfg)?;
        timer.lap("probe");
        let (ps, gs) = match resolve_hypotheses(&p, &geo, cfg.omega.as_ref()) {
            Ok(v) => v,
            Err(Error::Hypothesis { .. }) if cfg.mode == Mode::Validate => {
                hypothesis_checks(&geo, None, &mut report.checks);
                if let Some(omega) = &cfg.omega {
                    let premise = crate::potential::reflect_above(&p, omega)?
                        .reflection
                        .is_some_and(|r| r.premise_ok);
                    report.checks.push(Check::flag("reflection_premise", CheckKind::Hypothesis, premise));
                }
                report.geometry = Some(geo);
                out.report = report;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        hypothesis_checks(&gs, ps.reflection.as_ref(), &mut report.checks);
        report.resolved = Some(resolve(cfg, &ps, &gs)?);
        report.geometry = Some(gs);
        if ps.reflection.is_some() {
            report.unreflected_flags = Some(geo.hypothesis_flags);
            report.potential = PotentialSummary::from(&ps);
        }
        solved = ps;
    }

    if matches!(cfg.mode, Mode::Solve | Mode::All) {
        let resolved = report.resolved.clone().expect("resolved before solving");
        let geo = report.geometry.clone().expect("probed before solving");
        let opts = SpeedOptions {
            m: resolved.m,
            h: resolved.h,
            l: resolved.l,
            tol_c: Some(resolved.tol_c),
            tol_e: resolved.tol_e,
            seed_t: resolved.lambda_estimate.map(|lam| lam.min(resolved.l)),
            ..SpeedOptions::default()
        };
        // `solved` already passes (h*), so no reflection happens twice.
        let res = solve_speed(&solved, &geo, &opts)?;
        timer.lap("solve");
        let diag = verify_wave_seeded(
            &res.wave,
            res.c_star,
            &res.potential,
            &res.constraint,
            geo.alpha,
            Some(&geo),
            cfg.seed_rng,
        );
        let c_alt = MEMBERSHIP_FRACTION * res.c_star;
        let uniq = uniqueness_check(&res.wave, res.c_star, c_alt, &res.potential)?;
        let mopts = crate::constrained::MinimizeOptions {
            alpha: geo.alpha,
            ..Default::default()
        };
        let (membership, _) = min_action(
            c_alt,
            &res.potential,
            &res.constraint,
            &res.wave.grid,
            res.l_used / 2.0,
            Some(&res.wave),
            &mopts,
        )?;
        timer.lap("diagnose");

        let sep = solved.separation();
        let conv = &res.confirmation;
        let checks = &mut report.checks;
        checks.push(Check::flag("confirmation_converged", CheckKind::Convergence, conv.converged));
        checks.push(Check::flag("rim_free", CheckKind::Convergence, res.rim_free));
        checks.push(Check::new(
            "zero_action",
            CheckKind::Identity,
            res.action_at_c_star.abs(),
            Relation::Le,
            res.tol_e,
        ));
        checks.push(Check::new(
            "membership_below_c_star",
            CheckKind::Identity,
            membership,
            Relation::Lt,
            -MEMBERSHIP_MARGIN,
        ));
        checks.push(Check::new(
            "c_star_above_c_min",
            CheckKind::Identity,
            res.c_star,
            Relation::Ge,
            res.bracket.c_min,
        ));
        checks.push(Check::new(
            "c_star_below_c_max",
            CheckKind::Identity,
            res.c_star,
            Relation::Le,
            res.bracket.c_max,
        ));
        checks.push(Check::new(
            "speed_identity",
            CheckKind::Identity,
            diag.speed_identity_rel_err,
            Relation::Le,
            1e-2,
        ));
        checks.push(Check::new(
            "vector_identity",
            CheckKind::Identity,
            diag.vector_identity_err,
            Relation::Le,
            1e-2 * sep * res.c_star,
        ));
        checks.push(Check::new(
            "first_integral",
            CheckKind::Identity,
            diag.first_integral_rel_err,
            Relation::Le,
            1e-3,
        ));
        checks.push(Check::new(
            "plus_sphere_crossings",
            CheckKind::Identity,
            diag.crossings.plus_sphere_crossings as f64,
            Relation::Eq,
            1.0,
        ));
        checks.push(Check::new(
            "alpha_exits",
            CheckKind::Identity,
            diag.crossings.alpha_exits as f64,
            Relation::Eq,
            1.0,
        ));
        checks.push(Check::new(
            "monotonicity_violations",
            CheckKind::Identity,
            diag.monotonicity_violations as f64,
            Relation::Eq,
            0.0,
        ));
        if let Some(ok) = diag.lambda_bounds_ok {
            checks.push(Check::flag("time_bounds", CheckKind::Identity, ok));
        }
        checks.push(Check::new(
            "uniqueness_identity",
            CheckKind::Identity,
            uniq.residual,
            Relation::Le,
            1e-3,
        ));
        if let Some(r) = &res.reflection {
            checks.push(Check::new(
                "wave_inside_omega",
                CheckKind::Identity,
                r.min_margin,
                Relation::Gt,
                0.0,
            ));
        }

        report.wave = Some(WaveBlock::new(&res.wave, &res.potential, res.l_used, conv));
        report.speed = Some(SpeedSummary {
            c_star: res.c_star,
            action_at_c_star: res.action_at_c_star,
            bracket: res.bracket,
            c_lo: res.c_lo,
            c_hi: res.c_hi,
            c_mid: res.c_mid,
            refine_steps: res.refine_steps,
            l_used: res.l_used,
            m_used: res.m_used,
            tol_c: res.tol_c,
            tol_e: res.tol_e,
            rim_free: res.rim_free,
            recenter_shift: res.recenter_shift,
            confirmation: MinimizeSummary::from(conv),
            trace: res.trace.clone(),
            reflection: res.reflection.clone(),
            membership_action: membership,
        });
        report.diagnostics = Some(diag);
        report.uniqueness = Some(uniq);
        c_star = Some(res.c_star);
        out.wave = Some(res.wave);
    }

    if matches!(cfg.mode, Mode::Semiflow | Mode::All) {
        let sc = &cfg.semiflow;
        let grid = make_grid(sc.m, sc.h, 0.0)?;
        let state = SemiflowState::new(step_datum(&grid, &solved), &solved, sc.dt)?;
        let dt = state.dt;
        let opts = SemiflowOptions {
            t_final: sc.t_final,
            samples: sc.samples,
            ..SemiflowOptions::default()
        };
        let run = run_semiflow(state, &solved, &opts)?;
        timer.lap("semiflow");
        report.checks.push(Check::new(
            "free_energy_increases",
            CheckKind::Identity,
            run.energy_increases as f64,
            Relation::Eq,
            0.0,
        ));
        report.checks.push(Check::new(
            "front_speed_positive",
            CheckKind::Identity,
            run.trace.fitted_speed,
            Relation::Gt,
            0.0,
        ));
        if let Some(c) = c_star {
            report.checks.push(Check::new(
                "semiflow_speed_vs_c_star",
                CheckKind::Identity,
                (run.trace.fitted_speed - c).abs() / c,
                Relation::Le,
                0.05,
            ));
        }
        report.semiflow = Some(SemiflowSummary {
            m: sc.m,
            h: sc.h,
            dt,
            t_final: sc.t_final,
            steps: run.steps,
            window_shifts: run.window_shifts,
            energy_increases: run.energy_increases,
            max_energy_change: run.max_energy_change,
            energy_initial: run.energy_initial,
            energy_final: run.energy_final,
            trace: run.trace,
        });
        out.terminal = Some(run.state.field);
    }

    report.pass = report.checks.iter().all(|c| c.pass);
    if cfg.timings {
        report.timings = Some(timer.marks);
    }
    out.report = report;
    Ok(out)
}

/// Writes the report, the profiles and the plot into `dir`, returning the
/// paths written.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let names = &out.report.config.outputs;
    let mut written = Vec::new();
    let report_path = dir.join(&names.report);
    std::fs::write(&report_path, out.report.to_json()?).map_err(|e| Error::io(&report_path, e))?;
    written.push(report_path);
    if let Some(w) = &out.wave {
        let path = dir.join(&names.profile);
        w.write_csv(&path)?;
        written.push(path);
        if let Some(plot) = &names.plot {
            let path = dir.join(plot);
            emit_plot(&out.report, &path)?;
            written.push(path);
        }
    }
    if let (Some(sf), Some(field)) = (&out.report.semiflow, &out.terminal) {
        let path = dir.join(&names.front);
        write_front(&sf.trace, &path)?;
        written.push(path);
        let path = dir.join(&names.terminal);
        field.write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `t,front_x` rows.
pub fn write_front(trace: &FrontTrace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["t", "front_x"])?;
    for (t, x) in &trace.samples {
        w.write_record([format!("{t:.16e}"), format!("{x:.16e}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_auto() {
        let cfg = RunConfig::from_json(
            r#"{"potential": {"name": "nagumo", "params": {"a": 0.25}},
                "constraint": {"L": "auto", "r0": 0.05, "alpha": "auto"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Solve);
        assert_eq!(cfg.grid.m, Setting::Value(24.0));
        assert_eq!(cfg.constraint.l, Setting::Auto);
        assert_eq!(cfg.constraint.r0, Setting::Value(0.05));
        let echo = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&echo).unwrap(), cfg);
    }

    #[test]
    fn config_rejections() {
        for bad in [
            r#"{"potential": {"name": "nagumo"}, "speed": {"tol_c": "auto", "tol_E": 0}}"#,
            r#"{"potential": {"name": "nagumo"}, "grid": {"M": "wide", "h": 0.01}}"#,
            r#"{"potential": {"name": "nagumo"}, "colour": 3}"#,
            r#"{"potential": {"file": "w.poly"}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn check_relations() {
        assert!(Check::new("a", CheckKind::Identity, 1.0, Relation::Le, 1.0).pass);
        assert!(!Check::new("a", CheckKind::Identity, 1.0, Relation::Lt, 1.0).pass);
        assert!(!Check::new("a", CheckKind::Identity, f64::NAN, Relation::Le, 1.0).pass);
        assert!(Check::new("a", CheckKind::Identity, 2.0, Relation::Gt, 1.0).pass);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            error_exit_code(&Error::Hypothesis {
                hypothesis: "(h*)".into(),
                detail: String::new()
            }),
            EXIT_HYPOTHESIS
        );
        assert_eq!(error_exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(error_exit_code(&Error::Bisection("x".into())), EXIT_NONCONVERGENCE);
        assert_eq!(
            error_exit_code(&Error::io("x", std::io::Error::other("y"))),
            EXIT_IO
        );
    }
}
