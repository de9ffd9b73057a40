//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! n = 128
//!
//! [model]
//! alpha = 0.5
//!
//! [potentials]
//! V = [[1, 0.0, 1.0]]   # (k, cos, sin) triples
//! W = [[1, 1.0, 0.0]]
//!
//! [initial.rho]
//! offset = 0.5
//! modes = [[1, 0.2, 0.0]]
//!
//! [initial.mu]
//! values = [0.5, 0.5, 0.5, 0.5]   # injected onto the grid
//!
//! [time]
//! t_final = 0.05
//! snapshots = 10
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::diagnostics::{ReportOptions, DEFAULT_BANK_K};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{
    build_potentials, validate_initial, FourierMode, InitialProfile, Model, Nonlinearity,
    ProblemSpec, StepperKind, DEFAULT_S_FLOOR,
};
use crate::study::{halving_viscosity, Reference, StudyPlan};

pub const DEFAULT_PRECISION: usize = 17;
pub const DEFAULT_CFL_SAFETY: f64 = 0.5;
pub const DEFAULT_SNAPSHOTS: usize = 10;

type ModeTriple = (usize, f64, f64);

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    model: RawModel,
    #[serde(default)]
    potentials: RawPotentials,
    initial: RawInitial,
    time: RawTime,
    #[serde(default)]
    output: RawOutput,
    study: Option<RawStudy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alpha: f64,
    #[serde(default = "default_floor")]
    s_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_S_FLOOR
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotentials {
    #[serde(rename = "V", default)]
    v: Vec<ModeTriple>,
    #[serde(rename = "W", default)]
    w: Vec<ModeTriple>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    rho: RawProfile,
    mu: RawProfile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    offset: Option<f64>,
    #[serde(default)]
    modes: Vec<ModeTriple>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: f64,
    snapshots: Option<usize>,
    snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    stepper: StepperKind,
    #[serde(default = "default_cfl")]
    cfl_safety: f64,
    #[serde(default)]
    eps: f64,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL_SAFETY
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    dir: Option<PathBuf>,
    precision: usize,
    bank_k: usize,
    moduli: bool,
    residuals: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: None,
            precision: DEFAULT_PRECISION,
            bank_k: DEFAULT_BANK_K,
            moduli: true,
            residuals: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawReference {
    LinearHeat,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    levels: usize,
    #[serde(default = "yes")]
    refine_space: bool,
    #[serde(default)]
    refine_snapshots: bool,
    #[serde(default)]
    viscosity_schedule: Vec<f64>,
    /// Shorthand for `viscosity_schedule = eps0 * 2^-l`.
    eps0: Option<f64>,
    comparison_times: Option<Vec<f64>>,
    reference: Option<RawReference>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Significant digits of CSV floats.
    pub precision: usize,
    pub bank_k: usize,
    pub options: ReportOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub levels: usize,
    pub refine_space: bool,
    pub refine_snapshots: bool,
    pub viscosity_schedule: Vec<f64>,
    pub eps0: Option<f64>,
    pub comparison_times: Option<Vec<f64>>,
    pub reference: Option<Reference>,
}

/// Validated configuration, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub rho0: InitialProfile,
    pub mu0: InitialProfile,
    pub output: OutputConfig,
    pub study: Option<StudyConfig>,
}

fn modes(triples: &[ModeTriple]) -> Vec<FourierMode> {
    triples.iter().map(|&(k, c, s)| FourierMode::new(k, c, s)).collect()
}

fn profile(name: &str, raw: &RawProfile) -> Result<InitialProfile> {
    match (&raw.values, raw.offset) {
        (Some(_), _) if raw.offset.is_some() || !raw.modes.is_empty() => Err(Error::Config(format!(
            "initial.{name}: give either `values` or `offset`/`modes`, not both"
        ))),
        (Some(v), _) => Ok(InitialProfile::Values(v.clone())),
        (None, Some(offset)) => Ok(InitialProfile::Modes {
            offset,
            modes: modes(&raw.modes),
        }),
        (None, None) => Err(Error::Config(format!("initial.{name}: missing field `offset`"))),
    }
}

fn toml_error(e: toml::de::Error) -> Error {
    let mut msg = e.message().replace('\n', " ");
    if let Some(span) = e.span() {
        msg.push_str(&format!(" (at byte {})", span.start));
    }
    Error::Config(msg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(toml_error)?;
    let grid = GridSpec::new(raw.grid.n)?;
    let nonlinearity = Nonlinearity::with_floor(raw.model.alpha, raw.model.s_floor)?;
    let potentials = build_potentials(&modes(&raw.potentials.v), &modes(&raw.potentials.w), grid)?;
    let rho0 = profile("rho", &raw.initial.rho)?;
    let mu0 = profile("mu", &raw.initial.mu)?;
    let initial = validate_initial(rho0.sample(grid)?, mu0.sample(grid)?)?;

    let t = &raw.time;
    let snapshot_times = match (&t.snapshot_times, t.snapshots) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "time: give either `snapshots` or `snapshot_times`, not both".into(),
            ))
        }
        (Some(times), None) => times.clone(),
        (None, n) => ProblemSpec::uniform_snapshots(t.t_final, n.unwrap_or(DEFAULT_SNAPSHOTS)),
    };
    let problem = ProblemSpec {
        grid,
        model: Model {
            nonlinearity,
            potentials,
            eps_viscosity: t.eps,
        },
        initial,
        t_final: t.t_final,
        stepper: t.stepper,
        cfl_safety: t.cfl_safety,
        snapshot_times,
    };
    problem.validate()?;

    let o = &raw.output;
    if !(1..=17).contains(&o.precision) {
        return Err(Error::Config(format!("output.precision must lie in 1..=17, got {}", o.precision)));
    }
    if 4 * o.bank_k > grid.n_cells() {
        return Err(Error::ModeTooHigh {
            k: o.bank_k,
            n_cells: grid.n_cells(),
        });
    }
    let output = OutputConfig {
        dir: o.dir.clone(),
        precision: o.precision,
        bank_k: o.bank_k,
        options: ReportOptions {
            moduli: o.moduli,
            residuals: o.residuals,
        },
    };

    let study = raw.study.map(|s| StudyConfig {
        levels: s.levels,
        refine_space: s.refine_space,
        refine_snapshots: s.refine_snapshots,
        viscosity_schedule: s.viscosity_schedule,
        eps0: s.eps0,
        comparison_times: s.comparison_times,
        reference: s.reference.map(|RawReference::LinearHeat| Reference::LinearHeat),
    });
    let cfg = RunConfig {
        problem,
        rho0,
        mu0,
        output,
        study,
    };
    if cfg.study.is_some() {
        cfg.study_plan(None)?.validate()?;
    }
    Ok(cfg)
}

/// Values given on the command line that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub stepper: Option<StepperKind>,
    pub eps: Option<f64>,
    pub levels: Option<usize>,
}

/// Apply `overrides` to the document and return the effective config text,
/// which reproduces the run on its own.
pub fn apply_overrides(text: &str, overrides: &Overrides) -> Result<String> {
    if *overrides == Overrides::default() {
        return Ok(text.to_owned());
    }
    let mut doc: toml::Table = toml::from_str(text).map_err(toml_error)?;
    let section = |doc: &mut toml::Table, name: &str| -> Result<toml::Table> {
        match doc.remove(name) {
            Some(toml::Value::Table(t)) => Ok(t),
            None => Ok(toml::Table::new()),
            Some(_) => Err(Error::Config(format!("`{name}` must be a table"))),
        }
    };
    let mut time = section(&mut doc, "time")?;
    if let Some(s) = overrides.stepper {
        time.insert("stepper".into(), toml::Value::String(s.to_string()));
    }
    if let Some(e) = overrides.eps {
        time.insert("eps".into(), toml::Value::Float(e));
    }
    doc.insert("time".into(), toml::Value::Table(time));
    if let (Some(l), true) = (overrides.levels, doc.contains_key("study")) {
        let mut study = section(&mut doc, "study")?;
        study.insert("levels".into(), toml::Value::Integer(l as i64));
        doc.insert("study".into(), toml::Value::Table(study));
    }
    toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    /// The `[study]` section as a plan, optionally overriding the level count.
    pub fn study_plan(&self, levels: Option<usize>) -> Result<StudyPlan> {
        let s = self
            .study
            .as_ref()
            .ok_or_else(|| Error::Config("missing section `[study]`".into()))?;
        let levels = levels.unwrap_or(s.levels);
        let mut plan = StudyPlan::new(self.problem.clone(), self.rho0.clone(), self.mu0.clone(), levels);
        plan.refine_space = s.refine_space;
        plan.refine_snapshots = s.refine_snapshots;
        plan.viscosity_schedule = match (s.eps0, s.viscosity_schedule.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config(
                    "study: give either `eps0` or `viscosity_schedule`, not both".into(),
                ))
            }
            (Some(e0), true) => halving_viscosity(e0, levels),
            (None, _) => s.viscosity_schedule.clone(),
        };
        if let Some(t) = &s.comparison_times {
            plan.comparison_times = t.clone();
        }
        plan.reference = s.reference;
        plan.bank_k = self.output.bank_k;
        plan.validate()?;
        Ok(plan)
    }
}
