//! Scenario configs, the dispatcher that runs them, and report emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    enumerate_lhv_omega, enumerate_nchv_chi, noncontextual_local_omega, BoundReport, ModelClass,
};
use crate::error::{Error, Result};
use crate::noise::{calibrate, CalibrationAxis, CalibrationResult, CalibrationTargets, NoiseModel, CALIBRATION_TOL};
use crate::sampling::{
    estimate, sample_table, sampled_no_signaling, significance, standard_plans, ChiSource,
    CountsTable, EstimateOptions, EstimateReport, SampledNoSignaling, DEFAULT_SHOTS,
};
use crate::sequential::{
    CorrelatorReport, MeasurementPlan, NoSignalingReport, SignMode, LHV_BOUND, NCHV_BOUND,
};
use crate::serialize::{canonicalize, counts_csv, estimate_terms_csv, terms_csv, to_canonical_json};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "pmnl";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact marginal deviations allowed by the no-signaling verdict.
pub const NO_SIGNALING_TOL: f64 = 1e-10;
/// Largest sampled |z| accepted by the no-signaling verdict.
pub const NO_SIGNALING_Z: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    QuantumExact,
    Bounds,
    Sample,
    Calibrate,
    Significance,
    NoSignaling,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::QuantumExact => "quantum-exact",
            Mode::Bounds => "bounds",
            Mode::Sample => "sample",
            Mode::Calibrate => "calibrate",
            Mode::Significance => "significance",
            Mode::NoSignaling => "no-signaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default = "measured_targets")]
    pub targets: CalibrationTargets,
    #[serde(default)]
    pub axis: CalibrationAxis,
}

fn measured_targets() -> CalibrationTargets {
    CalibrationTargets::MEASURED
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            targets: CalibrationTargets::MEASURED,
            axis: CalibrationAxis::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignificanceInput {
    pub name: String,
    pub value: f64,
    pub standard_error: f64,
    pub bound: f64,
}

impl SignificanceInput {
    /// The two published value/error pairs against their bounds.
    pub fn measured() -> Vec<SignificanceInput> {
        vec![
            SignificanceInput {
                name: "chi".into(),
                value: 5.817,
                standard_error: 0.011,
                bound: NCHV_BOUND,
            },
            SignificanceInput {
                name: "omega".into(),
                value: 17.247,
                standard_error: 0.019,
                bound: LHV_BOUND,
            },
        ]
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_shots() -> u64 {
    DEFAULT_SHOTS
}
fn default_model() -> ModelClass {
    ModelClass::Lhv
}
fn default_true() -> bool {
    true
}
fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Emitted shots per configuration.
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sign_mode: SignMode,
    /// Bound sweep class (mode `bounds`).
    #[serde(default = "default_model")]
    pub model: ModelClass,
    /// Restricts `lhv` to `lhv-past-only`.
    #[serde(default, skip_serializing_if = "is_false")]
    pub past_only: bool,
    #[serde(default)]
    pub chi_source: ChiSource,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    /// Mode `significance`; empty means the published pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<SignificanceInput>,
    /// Failing verdicts make the run fail.
    #[serde(default = "default_true")]
    pub assert_verdicts: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(mode: Mode) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            mode,
            noise: NoiseModel::IDEAL,
            shots: DEFAULT_SHOTS,
            seed: 0,
            sign_mode: SignMode::default(),
            model: default_model(),
            past_only: false,
            chi_source: ChiSource::default(),
            calibration: CalibrationConfig::default(),
            significance: Vec::new(),
            assert_verdicts: true,
            output_dir: None,
        }
    }

    /// Parses and validates; diagnostics carry JSON pointers.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            pointer: json_pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |pointer: &str, message: String| {
            Err(Error::Schema {
                pointer: pointer.into(),
                message,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return fail(
                "/schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if let Err(Error::ParameterOutOfRange { name, value, range }) = self.noise.validate() {
            return fail(&format!("/noise/{name}"), format!("{value} is outside {range}"));
        }
        if self.shots == 0 {
            return fail("/shots", "must be at least 1".into());
        }
        if self.past_only && self.model != ModelClass::Lhv && self.model != ModelClass::LhvPastOnly {
            return fail("/past_only", format!("only applies to model lhv, not {}", self.model));
        }
        let t = self.calibration.targets;
        if !(t.chi.is_finite() && t.s.is_finite()) {
            return fail("/calibration/targets", "targets must be finite".into());
        }
        for (i, s) in self.significance.iter().enumerate() {
            if s.standard_error.is_nan() || s.standard_error <= 0.0 {
                return fail(
                    &format!("/significance/{i}/standard_error"),
                    format!("must be positive, got {}", s.standard_error),
                );
            }
        }
        Ok(())
    }

    /// Effective sweep class after `past_only`.
    pub fn model_class(&self) -> ModelClass {
        if self.past_only {
            ModelClass::LhvPastOnly
        } else {
            self.model
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// A named comparison against a bound or tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub bound: String,
    pub value: f64,
    pub threshold: f64,
    /// Signed so that `holds` iff `margin > 0` (or `>= 0` for upper limits).
    pub margin: f64,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<f64>,
}

impl Verdict {
    fn exceeds(name: &str, bound: &str, value: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            bound: bound.into(),
            value,
            threshold,
            margin: value - threshold,
            holds: value > threshold,
            sigmas: None,
        }
    }

    fn at_most(name: &str, bound: &str, value: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            bound: bound.into(),
            value,
            threshold,
            margin: threshold - value,
            holds: value <= threshold,
            sigmas: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub input: SignificanceInput,
    pub sigmas: f64,
    pub sigmas_rounded: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlators: Option<CorrelatorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<SignificanceResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_signaling: Option<NoSignalingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_no_signaling: Option<SampledNoSignaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<CountsTable>,
    pub verdicts: Vec<Verdict>,
}

impl RunReport {
    fn new(config: &ScenarioConfig) -> Self {
        RunReport {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            config: config.clone(),
            correlators: None,
            bounds: None,
            calibration: None,
            estimate: None,
            significance: Vec::new(),
            no_signaling: None,
            sampled_no_signaling: None,
            counts: None,
            verdicts: Vec::new(),
        }
    }

    pub fn all_verdicts_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    /// Passes unless verdicts are asserted and one fails.
    pub fn passed(&self) -> bool {
        !self.config.assert_verdicts || self.all_verdicts_hold()
    }
}

fn correlator_verdicts(r: &CorrelatorReport) -> Vec<Verdict> {
    vec![
        Verdict::exceeds("chi-violates-nchv", "NCHV bound on χ", r.chi.total, NCHV_BOUND),
        Verdict::exceeds("omega-violates-lhv", "LHV bound on ω", r.omega, LHV_BOUND),
    ]
}

/// Runs a validated config. Deterministic given the config; the returned
/// report is already in its canonical (serialized) form.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let mut report = RunReport::new(config);
    match config.mode {
        Mode::QuantumExact => {
            let r = config.noise.evaluate(config.sign_mode)?;
            report.verdicts = correlator_verdicts(&r);
            report.correlators = Some(r);
        }
        Mode::Bounds => {
            let class = config.model_class();
            let b = match class {
                ModelClass::Nchv => enumerate_nchv_chi(),
                ModelClass::Lhv => enumerate_lhv_omega(config.sign_mode, false),
                ModelClass::LhvPastOnly => enumerate_lhv_omega(config.sign_mode, true),
                ModelClass::NcLocal => noncontextual_local_omega(),
            };
            let value = b.maximum_value();
            report.verdicts.push(Verdict::at_most(
                "witness-reproduces-maximum",
                "re-evaluated witness",
                f64::from((b.witness_value() - b.maximum).abs()),
                0.0,
            ));
            // Absolute-mode LHV classes have no target bound.
            let expected = match (class, b.sign_mode) {
                (ModelClass::Nchv, _) => Some(("NCHV bound on χ", NCHV_BOUND)),
                (ModelClass::NcLocal, _) => Some(("LHV bound on ω", LHV_BOUND)),
                (_, Some(SignMode::FixedSign)) => Some(("LHV bound on ω", LHV_BOUND)),
                _ => None,
            };
            if let Some((name, bound)) = expected {
                report
                    .verdicts
                    .push(Verdict::at_most("maximum-within-bound", name, value, bound));
            }
            report.bounds = Some(b);
        }
        Mode::Sample => {
            let table = sample_table(&config.noise, &standard_plans(), config.shots, config.seed)?;
            let est = estimate(
                &table,
                EstimateOptions {
                    sign_mode: config.sign_mode,
                    chi_source: config.chi_source,
                },
            )?;
            for (name, bound, e, t) in [
                ("chi-violates-nchv", "NCHV bound on χ", est.chi, NCHV_BOUND),
                ("omega-violates-lhv", "LHV bound on ω", est.omega, LHV_BOUND),
            ] {
                let mut v = Verdict::exceeds(name, bound, e.value, t);
                v.sigmas = significance(e.value, e.standard_error, t).ok();
                report.verdicts.push(v);
            }
            let ns = sampled_no_signaling(&table)?;
            report.verdicts.push(Verdict::at_most(
                "sampled-no-signaling",
                "max |z| of marginals",
                ns.max_z,
                NO_SIGNALING_Z,
            ));
            report.estimate = Some(est);
            report.sampled_no_signaling = Some(ns);
            report.counts = Some(table);
        }
        Mode::Calibrate => {
            let c = calibrate(config.calibration.targets, config.calibration.axis)?;
            report.verdicts.push(Verdict::at_most(
                "chi-residual",
                "calibration tolerance",
                c.chi_residual.abs(),
                CALIBRATION_TOL,
            ));
            report.verdicts.push(Verdict::at_most(
                "s-residual",
                "calibration tolerance",
                c.s_residual.abs(),
                CALIBRATION_TOL,
            ));
            report.verdicts.push(Verdict::exceeds(
                "omega-violates-lhv",
                "LHV bound on ω",
                c.omega,
                LHV_BOUND,
            ));
            report.correlators = Some(c.model.evaluate(SignMode::Absolute)?);
            report.calibration = Some(c);
        }
        Mode::Significance => {
            let inputs = if config.significance.is_empty() {
                SignificanceInput::measured()
            } else {
                config.significance.clone()
            };
            for input in inputs {
                let sigmas = significance(input.value, input.standard_error, input.bound)?;
                let mut v = Verdict::exceeds(
                    &format!("{}-exceeds-bound", input.name),
                    &format!("bound {}", input.bound),
                    input.value,
                    input.bound,
                );
                v.sigmas = Some(sigmas);
                report.verdicts.push(v);
                report.significance.push(SignificanceResult {
                    input,
                    sigmas,
                    sigmas_rounded: sigmas.round() as i64,
                });
            }
        }
        Mode::NoSignaling => {
            let (state, engine) = config.noise.prepare()?;
            let exact = engine.no_signaling_report(&state)?;
            report.verdicts.push(Verdict::at_most(
                "exact-no-signaling",
                "marginal deviation tolerance",
                exact.max_deviation,
                NO_SIGNALING_TOL,
            ));
            let table = sample_table(&config.noise, &MeasurementPlan::all(), config.shots, config.seed)?;
            let ns = sampled_no_signaling(&table)?;
            report.verdicts.push(Verdict::at_most(
                "sampled-no-signaling",
                "max |z| of marginals",
                ns.max_z,
                NO_SIGNALING_Z,
            ));
            report.no_signaling = Some(exact);
            report.sampled_no_signaling = Some(ns);
            report.counts = Some(table);
        }
    }
    canonicalize(&report)
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub report: PathBuf,
    pub terms: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub timing: Option<PathBuf>,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes `report.json`, `terms.csv` when the run has per-term values, and
/// `counts.csv` when it sampled. Wall time, which would break byte
/// stability, goes to a separate `timing.json`.
pub fn emit_report(report: &RunReport, dir: &Path, wall_time: Option<Duration>) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let report_path = write(dir.join("report.json"), &to_canonical_json(report)?)?;
    let terms = if let Some(e) = &report.estimate {
        Some(estimate_terms_csv(e))
    } else {
        report.correlators.as_ref().map(terms_csv)
    };
    let terms = terms.map(|t| write(dir.join("terms.csv"), &t)).transpose()?;
    let counts = report
        .counts
        .as_ref()
        .map(|c| write(dir.join("counts.csv"), &counts_csv(c)))
        .transpose()?;
    let timing = wall_time
        .map(|d| {
            let doc = serde_json::json!({ "wall_time_seconds": d.as_secs_f64() });
            write(dir.join("timing.json"), &format!("{doc}\n"))
        })
        .transpose()?;
    Ok(EmittedFiles {
        report: report_path,
        terms,
        counts,
        timing,
    })
}
