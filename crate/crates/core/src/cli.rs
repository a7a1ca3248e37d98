//! Command-line front end.
//!
//! Every run is described by a [`RunConfig`], read from an optional JSON file
//! and overridden field by field by command-line flags.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, TransferMetrics};
use crate::dynamics::{self, InitialState, IntegratorOptions, Trajectory};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::optimizer::{self, ChirpProfile, DEFAULT_GRID_SAMPLES, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::pulse::{pi_pulse_duration, Carrier, EnvelopeShape, PhaseMode, PulseSpec, Tabulated};
use crate::system::{load_system, LevelSystem, SystemFormat, TransitionPair};
use crate::units::{au_to_ns, ns_to_au, AU_TIME_SECONDS};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CarrierMode {
    /// Fixed at the resonant frequency of the selected pair.
    Resonant,
    /// Fixed at `omega_au`.
    Fixed,
    FirstOrder,
    Recurrent,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// System description (JSON).
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Bundled system: hf3, two or multi12.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub alpha: Option<usize>,
    #[arg(long)]
    pub beta: Option<usize>,

    /// Peak field, a.u.
    #[arg(long)]
    pub f0_au: Option<f64>,
    /// Choose the peak field so the strongest perturber has this sigma^2.
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Choose the peak field so that sigma_tot^2 takes this value.
    #[arg(long)]
    pub sigma_tot_sq: Option<f64>,

    /// square, sine or sine_squared.
    #[arg(long)]
    pub shape: Option<String>,
    /// Tabulated envelope, CSV `t_au,m` with a header row.
    #[arg(long)]
    pub envelope_csv: Option<PathBuf>,
    #[arg(long)]
    pub duration_au: Option<f64>,
    #[arg(long)]
    pub duration_ns: Option<f64>,
    /// Duration from the pulse area: pi is one full oscillation.
    #[arg(long)]
    pub angle: Option<f64>,

    #[arg(long, value_enum)]
    pub carrier: Option<CarrierMode>,
    /// Carrier frequency for `--carrier fixed`, a.u.
    #[arg(long)]
    pub omega_au: Option<f64>,
    /// Carrier phase convention: literal (omega(t) t) or integrated.
    #[arg(long)]
    pub phase: Option<String>,

    /// Initially populated level; defaults to beta.
    #[arg(long)]
    pub initial: Option<usize>,

    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Max step as a fraction of the fastest oscillation period.
    #[arg(long)]
    pub step_fraction: Option<f64>,
    #[arg(long)]
    pub report_points: Option<usize>,

    #[arg(long)]
    pub chirp_samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Leakage budget per perturber for the maximum-drive estimate.
    #[arg(long)]
    pub leakage_budget: Option<f64>,

    /// Main CSV output (trajectory, chirp, sweep table or comparison series).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the JSON printed on stdout to this file.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($field:ident),+ $(,)?) => {
        RunConfig { $($field: $over.$field.or($base.$field)),+ }
    };
}

impl RunConfig {
    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        overlay!(
            self, over, system, fixture, alpha, beta, f0_au, sigma_sq, sigma_tot_sq, shape, envelope_csv,
            duration_au, duration_ns, angle, carrier, omega_au, phase, initial, rtol, atol, step_fraction,
            report_points, chirp_samples, tol, max_iter, leakage_budget, out, json_out,
        )
    }

    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Omit the metadata line/field (wall-clock time, tool version).
    #[arg(long)]
    pub no_meta: bool,
    #[command(flatten)]
    pub run: RunConfig,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.run.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    F0,
    Duration,
    Shape,
}

#[derive(Debug, Parser)]
#[command(name = "rabi-chirp", version, about = "Chirped-pulse design and verification for selective population transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perturbation strengths, leakage bounds and (optionally) the optimized chirp.
    Design(CommonArgs),
    /// Integrate one pulse and report transfer metrics.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Add re/im amplitude columns to the trajectory CSV.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Resonant versus optimized carrier on the same envelope.
    Compare(CommonArgs),
    /// Pulse duration for a given pulse angle.
    PiPulse {
        #[command(flatten)]
        common: CommonArgs,
        /// Transition dipole, a.u.; taken from the system when omitted.
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Repeat `simulate` over a grid of peak fields, durations or shapes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub system: LevelSystem,
    pub pair: TransitionPair,
    pub amplitude: f64,
    pub shape: EnvelopeShape,
    pub duration: Option<f64>,
    pub carrier: CarrierMode,
    pub omega_au: Option<f64>,
    pub phase: PhaseMode,
    pub initial: usize,
    pub integrator: IntegratorOptions,
    pub chirp_samples: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub leakage_budget: f64,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn load_plan_system(cfg: &RunConfig) -> Result<LevelSystem> {
    match (&cfg.system, &cfg.fixture) {
        (Some(_), Some(_)) => Err(config_err("give either system or fixture, not both")),
        (Some(path), None) => {
            let file = File::open(path).map_err(|e| config_err(format!("cannot open {}: {e}", path.display())))?;
            load_system(file, SystemFormat::Json)
        }
        (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| {
            config_err(format!("unknown fixture {name:?}; available: {}", fixtures::NAMES.join(", ")))
        }),
        (None, None) => Err(config_err("no system given (use system or fixture)")),
    }
}

impl Plan {
    pub fn from_config(cfg: &RunConfig) -> Result<Plan> {
        let system = load_plan_system(cfg)?;
        let (alpha, beta) = match (cfg.alpha, cfg.beta) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(config_err("alpha and beta must both be given")),
        };
        let pair = TransitionPair::new(&system, alpha, beta)?;

        let amplitude = match (cfg.f0_au, cfg.sigma_sq, cfg.sigma_tot_sq) {
            (Some(f), None, None) => f,
            (None, Some(s), None) => optimizer::amplitude_for_sigma_sq(&system, &pair, s)?,
            (None, None, Some(s)) => optimizer::amplitude_for_sigma_tot_sq(&system, &pair, s)?,
            _ => return Err(config_err("exactly one of f0_au, sigma_sq, sigma_tot_sq is required")),
        };
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(config_err(format!("peak field must be finite and nonnegative, got {amplitude}")));
        }

        let shape = match (&cfg.shape, &cfg.envelope_csv) {
            (Some(_), Some(_)) => return Err(config_err("give either shape or envelope_csv, not both")),
            (None, Some(path)) => {
                let file = File::open(path).map_err(|e| config_err(format!("cannot open {}: {e}", path.display())))?;
                EnvelopeShape::Tabulated(Tabulated::from_csv(file)?)
            }
            (Some(name), None) => EnvelopeShape::builtin(name)
                .ok_or_else(|| config_err(format!("unknown shape {name:?}; use square, sine or sine_squared")))?,
            (None, None) => EnvelopeShape::Square,
        };

        let mu_ab = system.dipole(pair.alpha, pair.beta);
        let duration = match (cfg.duration_au, cfg.duration_ns, cfg.angle) {
            (Some(d), None, None) => Some(d),
            (None, Some(ns), None) => Some(ns_to_au(ns)),
            (None, None, Some(angle)) => Some(pi_pulse_duration(amplitude, mu_ab, &shape, angle)?),
            (None, None, None) => None,
            _ => return Err(config_err("give at most one of duration_au, duration_ns, angle")),
        };
        if let Some(d) = duration {
            if !(d > 0.0 && d.is_finite()) {
                return Err(config_err(format!("duration must be positive, got {d}")));
            }
        }

        let carrier = cfg.carrier.unwrap_or(CarrierMode::FirstOrder);
        if carrier == CarrierMode::Fixed && cfg.omega_au.is_none() {
            return Err(config_err("carrier fixed needs omega_au"));
        }
        let phase = match cfg.phase.as_deref() {
            None | Some("literal") => PhaseMode::Literal,
            Some("integrated") => PhaseMode::Integrated,
            Some(other) => return Err(config_err(format!("unknown phase mode {other:?}; use literal or integrated"))),
        };

        let initial = cfg.initial.unwrap_or(pair.beta);
        if initial != pair.alpha && initial != pair.beta {
            return Err(config_err(format!(
                "initial level {initial} must be alpha ({}) or beta ({})",
                pair.alpha, pair.beta
            )));
        }

        let defaults = IntegratorOptions::default();
        let integrator = IntegratorOptions {
            rtol: cfg.rtol.unwrap_or(defaults.rtol),
            atol: cfg.atol.unwrap_or(defaults.atol),
            step_fraction: cfg.step_fraction.unwrap_or(defaults.step_fraction),
            report_points: cfg.report_points.unwrap_or(defaults.report_points),
        };

        Ok(Plan {
            system,
            pair,
            amplitude,
            shape,
            duration,
            carrier,
            omega_au: cfg.omega_au,
            phase,
            initial,
            integrator,
            chirp_samples: cfg.chirp_samples.unwrap_or(DEFAULT_GRID_SAMPLES),
            tol: cfg.tol.unwrap_or(DEFAULT_TOL),
            max_iter: cfg.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            leakage_budget: cfg.leakage_budget.unwrap_or(0.01),
        })
    }

    pub fn omega_ab(&self) -> f64 {
        self.system.transition(self.pair.alpha, self.pair.beta).map(|t| t.omega).unwrap_or(0.0)
    }

    pub fn target(&self) -> usize {
        self.pair.partner(self.initial)
    }

    pub fn require_duration(&self) -> Result<f64> {
        self.duration
            .ok_or_else(|| config_err("this command needs duration_au, duration_ns or angle"))
    }

    /// Pulse with the resonant carrier; chirps are built on top of it.
    pub fn base_pulse(&self) -> Result<PulseSpec> {
        Ok(PulseSpec::new(
            self.amplitude,
            self.shape.clone(),
            self.require_duration()?,
            Carrier::Fixed(self.omega_ab()),
        )?
        .with_phase_mode(self.phase))
    }

    pub fn chirp(&self, base: &PulseSpec, mode: CarrierMode) -> Result<Option<ChirpProfile>> {
        match mode {
            CarrierMode::FirstOrder => Ok(Some(optimizer::first_order_chirp(
                &self.system,
                &self.pair,
                base,
                self.chirp_samples,
            )?)),
            CarrierMode::Recurrent => {
                let c = optimizer::recurrent_chirp(
                    &self.system,
                    &self.pair,
                    base,
                    self.chirp_samples,
                    self.tol,
                    self.max_iter,
                )?;
                if !c.converged() {
                    return Err(Error::NotConverged {
                        iterations: self.max_iter,
                        residual: c.residuals.last().copied().unwrap_or(f64::NAN),
                    });
                }
                Ok(Some(c))
            }
            CarrierMode::Resonant | CarrierMode::Fixed => Ok(None),
        }
    }

    pub fn pulse(&self, mode: CarrierMode) -> Result<PulseSpec> {
        let base = self.base_pulse()?;
        Ok(match mode {
            CarrierMode::Resonant => base,
            CarrierMode::Fixed => base.with_carrier(Carrier::Fixed(self.omega_au.unwrap_or(self.omega_ab()))),
            _ => base.with_carrier(Carrier::Chirped(self.chirp(&base, mode)?.unwrap())),
        })
    }

    pub fn simulate(&self, spec: &PulseSpec) -> Result<Trajectory> {
        dynamics::integrate(
            &self.system,
            spec,
            &InitialState::Level(self.initial),
            spec.duration,
            &self.integrator,
        )
    }
}

/// Output of `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub f0_au: f64,
    pub duration_au: f64,
    pub duration_ns: f64,
    pub shape: String,
    pub carrier: CarrierMode,
    pub initial: usize,
    pub metrics: TransferMetrics,
    pub norm_drift: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

pub fn cmd_simulate(plan: &Plan) -> Result<(SimulationSummary, Trajectory)> {
    let spec = plan.pulse(plan.carrier)?;
    let traj = plan.simulate(&spec)?;
    let metrics = analysis::transfer_metrics(&traj, &plan.pair, plan.target(), spec.duration)?;
    Ok((
        SimulationSummary {
            f0_au: plan.amplitude,
            duration_au: spec.duration,
            duration_ns: au_to_ns(spec.duration),
            shape: plan.shape.name().to_string(),
            carrier: plan.carrier,
            initial: plan.initial,
            metrics,
            norm_drift: traj.norm_drift,
            steps_accepted: traj.stats.accepted,
            steps_rejected: traj.stats.rejected,
        },
        traj,
    ))
}

/// Output of `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSummary {
    pub f0_au: f64,
    pub duration_au: f64,
    pub shape: String,
    pub optimized_carrier: CarrierMode,
    #[serde(flatten)]
    pub report: analysis::ComparisonReport,
    pub norm_drift: f64,
}

pub fn cmd_compare(plan: &Plan) -> Result<(ComparisonSummary, Trajectory, Trajectory)> {
    let mode = match plan.carrier {
        CarrierMode::Recurrent => CarrierMode::Recurrent,
        _ => CarrierMode::FirstOrder,
    };
    let specs = [plan.pulse(CarrierMode::Resonant)?, plan.pulse(mode)?];
    let mut runs: Vec<Trajectory> = specs
        .par_iter()
        .map(|s| plan.simulate(s))
        .collect::<Result<_>>()?;
    let optimized = runs.pop().unwrap();
    let resonant = runs.pop().unwrap();
    let duration = specs[0].duration;
    let report = analysis::compare_runs(&resonant, &optimized, &plan.pair, plan.target(), duration)?;
    Ok((
        ComparisonSummary {
            f0_au: plan.amplitude,
            duration_au: duration,
            shape: plan.shape.name().to_string(),
            optimized_carrier: mode,
            report,
            norm_drift: resonant.norm_drift.max(optimized.norm_drift),
        },
        resonant,
        optimized,
    ))
}

/// One row of a sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub f0_au: f64,
    pub duration_au: f64,
    pub shape: String,
    pub max_transfer: f64,
    pub max_transfer_time_au: f64,
    pub min_retained: f64,
    pub oscillation_count: usize,
    pub norm_drift: f64,
}

pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[String], jobs: usize) -> Result<Vec<SweepRow>> {
    let mut points: Vec<(String, RunConfig)> = Vec::with_capacity(values.len());
    for raw in values {
        let v = raw.trim().to_string();
        let mut c = cfg.clone();
        match axis {
            SweepAxis::F0 => {
                c.f0_au = Some(v.parse().map_err(|_| config_err(format!("bad f0 value {v:?}")))?);
                c.sigma_sq = None;
                c.sigma_tot_sq = None;
            }
            SweepAxis::Duration => {
                c.duration_au = Some(v.parse().map_err(|_| config_err(format!("bad duration value {v:?}")))?);
                c.duration_ns = None;
                c.angle = None;
            }
            SweepAxis::Shape => {
                c.shape = Some(v.clone());
                c.envelope_csv = None;
            }
        }
        points.push((v, c));
    }
    match axis {
        SweepAxis::Shape => points.sort_by(|a, b| a.0.cmp(&b.0)),
        _ => points.sort_by(|a, b| {
            let x: f64 = a.0.parse().unwrap();
            let y: f64 = b.0.parse().unwrap();
            x.total_cmp(&y)
        }),
    }
    let plans: Vec<(String, Plan)> = points
        .into_iter()
        .map(|(v, c)| Plan::from_config(&c).map(|p| (v, p)))
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_err(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        plans
            .par_iter()
            .map(|(v, plan)| {
                let (s, _) = cmd_simulate(plan)?;
                Ok(SweepRow {
                    value: v.clone(),
                    f0_au: s.f0_au,
                    duration_au: s.duration_au,
                    shape: s.shape,
                    max_transfer: s.metrics.max_transfer.value,
                    max_transfer_time_au: s.metrics.max_transfer.time,
                    min_retained: s.metrics.min_retained.value,
                    oscillation_count: s.metrics.oscillation_count,
                    norm_drift: s.norm_drift,
                })
            })
            .collect()
    })
}

pub fn write_sweep_csv<W: Write>(axis: SweepAxis, rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    let name = match axis {
        SweepAxis::F0 => "f0",
        SweepAxis::Duration => "duration",
        SweepAxis::Shape => "shape",
    };
    writeln!(
        out,
        "axis,value,f0_au,duration_au,shape,max_transfer,max_transfer_time_au,min_retained,oscillation_count,norm_drift"
    )?;
    for r in rows {
        writeln!(
            out,
            "{name},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.value,
            r.f0_au,
            r.duration_au,
            r.shape,
            r.max_transfer,
            r.max_transfer_time_au,
            r.min_retained,
            r.oscillation_count,
            r.norm_drift
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PiPulseReport {
    pub f0_au: f64,
    pub mu_au: f64,
    pub shape: String,
    pub angle: f64,
    pub duration_au: f64,
    pub duration_ns: f64,
}

pub fn cmd_pi_pulse(cfg: &RunConfig, mu: Option<f64>) -> Result<PiPulseReport> {
    let angle = cfg.angle.unwrap_or(std::f64::consts::PI);
    let (amplitude, mu, shape) = match mu {
        Some(mu) => {
            let f0 = cfg.f0_au.ok_or_else(|| config_err("pi-pulse with --mu needs f0_au"))?;
            let shape = match &cfg.shape {
                Some(name) => EnvelopeShape::builtin(name).ok_or_else(|| config_err(format!("unknown shape {name:?}")))?,
                None => EnvelopeShape::Square,
            };
            (f0, mu, shape)
        }
        None => {
            let mut c = cfg.clone();
            c.angle = None;
            let plan = Plan::from_config(&c)?;
            let mu = plan.system.dipole(plan.pair.alpha, plan.pair.beta);
            (plan.amplitude, mu, plan.shape)
        }
    };
    let d = pi_pulse_duration(amplitude, mu, &shape, angle)?;
    Ok(PiPulseReport {
        f0_au: amplitude,
        mu_au: mu,
        shape: shape.name().to_string(),
        angle,
        duration_au: d,
        duration_ns: au_to_ns(d),
    })
}

fn meta_json() -> serde_json::Value {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::json!({
        "tool": "rabi-chirp",
        "version": env!("CARGO_PKG_VERSION"),
        "au_time_s": AU_TIME_SECONDS,
        "generated_unix_s": now,
    })
}

fn meta_line() -> String {
    format!("# {}", meta_json())
}

struct Emitter {
    meta: bool,
}

impl Emitter {
    fn json<T: Serialize>(&self, value: &T, also: Option<&Path>) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if self.meta {
            if let serde_json::Value::Object(map) = &mut v {
                map.insert("meta".into(), meta_json());
            }
        }
        let text = serde_json::to_string_pretty(&v)? + "\n";
        print!("{text}");
        if let Some(path) = also {
            std::fs::write(path, &text)?;
        }
        Ok(())
    }

    fn csv<F>(&self, path: Option<&Path>, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        if let Some(path) = path {
            let mut w = BufWriter::new(File::create(path)?);
            if self.meta {
                writeln!(w, "{}", meta_line())?;
            }
            body(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Exit status for an error: 2 for bad input, 3 for numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. }
        | Error::NotConverged { .. }
        | Error::StepUnderflow { .. }
        | Error::OutsideDomain { .. }
        | Error::ShortTrajectory { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn norm_check(drift: f64) -> i32 {
    if drift > dynamics::NORM_DRIFT_LIMIT {
        eprintln!("error: norm drift {drift:e} exceeds {:e}", dynamics::NORM_DRIFT_LIMIT);
        EXIT_INVARIANT
    } else {
        0
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Design(common) => {
            let cfg = common.resolve()?;
            let plan = Plan::from_config(&cfg)?;
            let emit = Emitter { meta: !common.no_meta };
            let report =
                optimizer::design_report(&plan.system, &plan.pair, plan.amplitude, &plan.shape, plan.leakage_budget)?;
            if let Some(path) = cfg.out.as_deref() {
                let base = plan.base_pulse()?;
                let mode = match plan.carrier {
                    CarrierMode::Recurrent => CarrierMode::Recurrent,
                    _ => CarrierMode::FirstOrder,
                };
                let chirp = plan.chirp(&base, mode)?.unwrap();
                emit.csv(Some(path), |w| chirp.write_csv(w))?;
            }
            emit.json(&report, cfg.json_out.as_deref())?;
            Ok(0)
        }
        Command::Simulate { common, amplitudes } => {
            let cfg = common.resolve()?;
            let plan = Plan::from_config(&cfg)?;
            let emit = Emitter { meta: !common.no_meta };
            let (summary, traj) = cmd_simulate(&plan)?;
            emit.csv(cfg.out.as_deref(), |w| traj.write_csv(w, amplitudes))?;
            emit.json(&summary, cfg.json_out.as_deref())?;
            Ok(norm_check(summary.norm_drift))
        }
        Command::Compare(common) => {
            let cfg = common.resolve()?;
            let plan = Plan::from_config(&cfg)?;
            let emit = Emitter { meta: !common.no_meta };
            let (summary, resonant, optimized) = cmd_compare(&plan)?;
            emit.csv(cfg.out.as_deref(), |w| analysis::write_comparison_csv(&resonant, &optimized, w))?;
            emit.json(&summary, cfg.json_out.as_deref())?;
            Ok(norm_check(summary.norm_drift))
        }
        Command::PiPulse { common, mu } => {
            let cfg = common.resolve()?;
            let emit = Emitter { meta: !common.no_meta };
            emit.json(&cmd_pi_pulse(&cfg, mu)?, cfg.json_out.as_deref())?;
            Ok(0)
        }
        Command::Sweep {
            common,
            axis,
            values,
            jobs,
        } => {
            let cfg = common.resolve()?;
            let emit = Emitter { meta: !common.no_meta };
            let rows = cmd_sweep(&cfg, axis, &values, jobs)?;
            match cfg.out.as_deref() {
                Some(path) => emit.csv(Some(path), |w| write_sweep_csv(axis, &rows, w))?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    if emit.meta {
                        writeln!(lock, "{}", meta_line())?;
                    }
                    write_sweep_csv(axis, &rows, &mut lock)?;
                }
            }
            Ok(norm_check(rows.iter().map(|r| r.norm_drift).fold(0.0, f64::max)))
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
