//! `pmnl`: run simulator scenarios and write reports.
//!
//! Exit codes: 0 success, 1 verdict failure, 2 config error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmnl::bounds::ModelClass;
use pmnl::noise::CalibrationAxis;
use pmnl::scenario::{emit_report, run_scenario, Mode, RunReport, ScenarioConfig, SignificanceInput};
use pmnl::{Error, SignMode};

const OUT_ENV: &str = "PMNL_OUT_DIR";
const DEFAULT_OUT: &str = "pmnl-out";

#[derive(Parser)]
#[command(name = "pmnl", version, about = "Peres-Mermin nonlocality simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact quantum χ, S and ω for the configured noise.
    Simulate(Common),
    /// Hidden-variable bound sweep.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Alice's first outcome shared across sequences with the same first observable.
        #[arg(long)]
        past_only: bool,
    },
    /// Finite-shot sampling and estimation.
    Sample(Common),
    /// Fit noise parameters to target χ and S.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chi: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
    /// (value − bound) / standard error.
    Significance {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires_all = ["se", "bound"])]
        value: Option<f64>,
        #[arg(long, requires = "value")]
        se: Option<f64>,
        #[arg(long, requires = "value")]
        bound: Option<f64>,
    },
    /// Exact and sampled no-signaling checks.
    Nosignal(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $PMNL_OUT_DIR or ./pmnl-out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emitted shots per configuration.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    sign_mode: Option<SignModeArg>,
    /// Report verdicts without failing on them.
    #[arg(long)]
    no_assert: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignModeArg {
    Absolute,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Nchv,
    Lhv,
    NcLocal,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Phase,
    WhiteNoise,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        _ => 2,
    }
}

fn build_config(common: &Common, mode: Mode) -> Result<ScenarioConfig, Error> {
    let mut config = match &common.config {
        Some(path) => {
            let c = ScenarioConfig::from_file(path)?;
            if c.mode != mode {
                return Err(Error::Schema {
                    pointer: "/mode".into(),
                    message: format!("config mode {} does not match the subcommand ({})", c.mode.as_str(), mode.as_str()),
                });
            }
            c
        }
        None => ScenarioConfig::new(mode),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(shots) = common.shots {
        config.shots = shots;
    }
    if let Some(m) = common.sign_mode {
        config.sign_mode = match m {
            SignModeArg::Absolute => SignMode::Absolute,
            SignModeArg::Fixed => SignMode::FixedSign,
        };
    }
    if common.no_assert {
        config.assert_verdicts = false;
    }
    Ok(config)
}

fn configure(command: &Command) -> Result<(ScenarioConfig, &Common), Error> {
    Ok(match command {
        Command::Simulate(c) => (build_config(c, Mode::QuantumExact)?, c),
        Command::Sample(c) => (build_config(c, Mode::Sample)?, c),
        Command::Nosignal(c) => (build_config(c, Mode::NoSignaling)?, c),
        Command::Bounds { common, model, past_only } => {
            let mut config = build_config(common, Mode::Bounds)?;
            if let Some(m) = model {
                config.model = match m {
                    ModelArg::Nchv => ModelClass::Nchv,
                    ModelArg::Lhv => ModelClass::Lhv,
                    ModelArg::NcLocal => ModelClass::NcLocal,
                };
            }
            config.past_only |= past_only;
            (config, common)
        }
        Command::Calibrate { common, chi, s, axis } => {
            let mut config = build_config(common, Mode::Calibrate)?;
            if let Some(chi) = chi {
                config.calibration.targets.chi = *chi;
            }
            if let Some(s) = s {
                config.calibration.targets.s = *s;
            }
            if let Some(a) = axis {
                config.calibration.axis = match a {
                    AxisArg::Phase => CalibrationAxis::Phase,
                    AxisArg::WhiteNoise => CalibrationAxis::WhiteNoise,
                };
            }
            (config, common)
        }
        Command::Significance { common, value, se, bound } => {
            let mut config = build_config(common, Mode::Significance)?;
            if let (Some(value), Some(se), Some(bound)) = (value, se, bound) {
                config.significance = vec![SignificanceInput {
                    name: "value".into(),
                    value: *value,
                    standard_error: *se,
                    bound: *bound,
                }];
            }
            (config, common)
        }
    })
}

fn summarize(report: &RunReport) {
    if let Some(c) = &report.correlators {
        println!("chi = {}  S = {}  omega = {}", c.chi.total, c.s.total, c.omega);
    }
    if let Some(b) = &report.bounds {
        println!(
            "{} maximum = {} ({} maximizers of {})",
            b.model_class, b.maximum, b.maximizer_count, b.sweep_size
        );
    }
    if let Some(c) = &report.calibration {
        println!(
            "visibility = {}  phase = {}  ideal_fraction = {}  converged = {}",
            c.model.visibility, c.model.phase, c.model.ideal_fraction, c.converged
        );
    }
    if let Some(e) = &report.estimate {
        println!(
            "chi = {} ± {}  S = {} ± {}  omega = {} ± {}",
            e.chi.value, e.chi.standard_error, e.s.value, e.s.standard_error, e.omega.value, e.omega.standard_error
        );
    }
    for s in &report.significance {
        println!("{}: {} sigma (rounded {})", s.input.name, s.sigmas, s.sigmas_rounded);
    }
    for v in &report.verdicts {
        println!(
            "{} {}: value {} vs {} {} (margin {})",
            if v.holds { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.bound,
            v.threshold,
            v.margin
        );
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (config, common) = configure(&cli.command)?;
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let start = Instant::now();
    let report = run_scenario(&config)?;
    let files = emit_report(&report, &out, Some(start.elapsed()))?;
    summarize(&report);
    println!("wrote {}", files.report.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
