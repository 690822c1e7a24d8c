//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use qndsqueeze_core::design::{diffraction_area, ExperimentalParams, Regime};
use qndsqueeze_core::dynamics::{integrate_me, MeParams, DEFAULT_DT, DEFAULT_SAMPLE_EVERY};
use qndsqueeze_core::feedback::FeedbackLaw;
use qndsqueeze_core::observables::{find_minimum, fit_inverse_scaling};
use qndsqueeze_core::spin::{SpinOperators, SpinSystem};
use qndsqueeze_core::stochastic::{simulate_trajectory, stream_seed, DEFAULT_SME_DT};

use crate::config::{layer, parse_n_list, ConfigFile};
use crate::csv::{ensemble_csv, series_csv, sweep_csv, trajectory_csv, SweepRow};
use crate::error::CliError;
use crate::parallel;
use crate::report::{design_report, DesignInputs};

/// Sample spacing, in units of Mt, used when `--sample-every` is not given
/// for trajectory runs.
pub const TRAJECTORY_SAMPLE_SPACING: f64 = 1e-2;

#[derive(Debug, Parser)]
#[command(
    name = "qndsqueeze",
    version,
    about = "Spin squeezing by continuous QND measurement and feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the unconditional master equation and write the observable series.
    Evolve(DynamicsArgs),
    /// Simulate one homodyne-conditioned trajectory.
    Trajectory(TrajectoryArgs),
    /// Average K trajectories and compare with the master equation.
    Ensemble(EnsembleArgs),
    /// Squeezing minimum versus atom number, with a 1/N fit.
    Sweep(SweepArgs),
    /// Experimental budget report (SI units).
    Design(DesignArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Off,
    Constant,
    Analytic,
    Conditional,
}

#[derive(Debug, Default, Args)]
pub struct DynamicsArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of atoms N.
    #[arg(long)]
    pub n: Option<u32>,
    /// Measurement strength M (default 1: time in units of 1/M).
    #[arg(long)]
    pub m: Option<f64>,
    /// Detection efficiency in (0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub law: Option<LawArg>,
    /// Multiplier on lambda (e.g. 1.2 for a 20% miscalibration).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Feedback strength for `--law constant`.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Step in units of Mt.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final Mt.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Steps between recorded samples.
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectory index within the master seed's stream family.
    #[arg(long)]
    pub index: Option<u64>,
}

#[derive(Debug, Default, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Number of trajectories K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0: one per core). Output does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write every trajectory as `traj_<index>.csv` here.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Atom numbers: `10,20,30` or `10..100:10`.
    #[arg(long)]
    pub n_list: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// Caesium D line, N = 1e7, diffraction-scale beam.
    Cs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Cavity,
    Freespace,
}

#[derive(Debug, Default, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long)]
    pub n: Option<f64>,
    /// Spontaneous emission rate, 1/s.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Cavity decay rate, 1/s.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// One-photon Rabi frequency, rad/s.
    #[arg(long)]
    pub g: Option<f64>,
    /// Beam area, m^2.
    #[arg(long)]
    pub area: Option<f64>,
    /// Use the diffraction-scale area lambda^2 / (16 pi^2).
    #[arg(long)]
    pub area_min: bool,
    /// Probe wavelength, m.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Probe power, W.
    #[arg(long)]
    pub power: Option<f64>,
    /// Probe detuning, rad/s.
    #[arg(long)]
    pub detuning: Option<f64>,
    /// Probe angular frequency, rad/s (default 2 pi c / wavelength).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Achievable feedback latency, s.
    #[arg(long)]
    pub feedback_delay: Option<f64>,
    /// Use this alpha instead of the regime formula.
    #[arg(long)]
    pub alpha_override: Option<f64>,
    /// Relative error for the single-shot comparison.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Settings shared by the dynamics subcommands after layering.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub law: LawArg,
    pub scale: f64,
    pub lambda0: f64,
    pub params: MeParams,
    pub output: Option<PathBuf>,
}

struct Defaults {
    n: u32,
    dt: f64,
    t_max: f64,
    law: LawArg,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn parse_law(s: &str) -> Result<LawArg, CliError> {
    LawArg::from_str(s, true).map_err(|_| CliError::Validation(format!("unknown law `{s}`")))
}

fn resolve(
    a: &DynamicsArgs,
    file: &ConfigFile,
    d: Defaults,
    trajectory: bool,
) -> Result<RunConfig, CliError> {
    let file_law = file.raw("law").map(parse_law).transpose()?;
    let dt = layer(a.dt, file.get("dt")?, d.dt);
    let default_every = if trajectory {
        ((TRAJECTORY_SAMPLE_SPACING / dt).round() as usize).max(1)
    } else {
        DEFAULT_SAMPLE_EVERY
    };
    let params = MeParams {
        measurement_strength: layer(a.m, file.get("m")?, 1.0),
        efficiency: layer(a.eta, file.get("eta")?, 1.0),
        dt,
        t_max: layer(a.t_max, file.get("t_max")?, d.t_max),
        sample_every: layer(a.sample_every, file.get("sample_every")?, default_every),
    };
    params.validate()?;
    let n = layer(a.n, file.get("n")?, d.n);
    if n == 0 {
        return Err(CliError::Validation("n must be at least 1".into()));
    }
    Ok(RunConfig {
        n,
        law: layer(a.law, file_law, d.law),
        scale: layer(a.scale, file.get("scale")?, 1.0),
        lambda0: layer(a.lambda0, file.get("lambda0")?, 0.0),
        params,
        output: a.output.clone().or(file.get::<PathBuf>("output")?),
    })
}

impl RunConfig {
    pub fn law_for(&self, n: u32) -> qndsqueeze_core::Result<FeedbackLaw> {
        let base = match self.law {
            LawArg::Off => FeedbackLaw::off(),
            LawArg::Constant => FeedbackLaw::constant(self.lambda0)?,
            LawArg::Analytic => FeedbackLaw::analytic(n, self.params.efficiency)?,
            LawArg::Conditional => FeedbackLaw::conditional(),
        };
        base.with_scale(self.scale)
    }
}

fn emit(output: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs one parsed command, writing to `stdout` unless an output file is set.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(a) => evolve(&a, stdout),
        Command::Trajectory(a) => trajectory(&a, stdout),
        Command::Ensemble(a) => ensemble(&a, stdout),
        Command::Sweep(a) => sweep(&a, stdout),
        Command::Design(a) => design(&a, stdout),
    }
}

pub fn evolve_config(a: &DynamicsArgs) -> Result<RunConfig, CliError> {
    let file = load_config(&a.config)?;
    let d = Defaults {
        n: 20,
        dt: DEFAULT_DT,
        t_max: 2.0,
        law: LawArg::Analytic,
    };
    resolve(a, &file, d, false)
}

fn evolve(a: &DynamicsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = evolve_config(a)?;
    let ops = SpinOperators::new(SpinSystem::new(cfg.n)?);
    let (series, _) = integrate_me(&ops.css_x(), &cfg.params, &cfg.law_for(cfg.n)?, &ops)?;
    let minimum = find_minimum(&series).ok();
    emit(&cfg.output, &series_csv(&series, minimum.as_ref()), stdout)
}

fn trajectory_defaults() -> Defaults {
    Defaults {
        n: 10,
        dt: DEFAULT_SME_DT,
        t_max: 1.5,
        law: LawArg::Analytic,
    }
}

fn trajectory(a: &TrajectoryArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&a.dynamics.config)?;
    let cfg = resolve(&a.dynamics, &file, trajectory_defaults(), true)?;
    let seed = layer(a.seed, file.get("seed")?, 1);
    let index = layer(a.index, file.get("index")?, 0);
    let ops = SpinOperators::new(SpinSystem::new(cfg.n)?);
    let rec = simulate_trajectory(
        &ops.css_x(),
        &cfg.params,
        &cfg.law_for(cfg.n)?,
        stream_seed(seed, index),
        &ops,
    )?;
    emit(&cfg.output, &trajectory_csv(&rec), stdout)
}

fn ensemble(a: &EnsembleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&a.dynamics.config)?;
    let cfg = resolve(&a.dynamics, &file, trajectory_defaults(), true)?;
    let k = layer(a.k, file.get("k")?, 500);
    if k == 0 {
        return Err(CliError::Validation("k must be at least 1".into()));
    }
    let seed = layer(a.seed, file.get("seed")?, 1);
    let threads = layer(a.threads, file.get("threads")?, 0);
    let dump = a.dump_dir.clone().or(file.get::<PathBuf>("dump_dir")?);
    let ops = SpinOperators::new(SpinSystem::new(cfg.n)?);
    let law = cfg.law_for(cfg.n)?;
    let rho0 = ops.css_x();
    let (res, records) = parallel::with_threads(threads, || {
        parallel::ensemble(&rho0, &cfg.params, &law, k, seed, dump.is_some(), &ops)
    })??;
    if let Some(dir) = &dump {
        write_dumps(dir, &records)?;
    }
    emit(&cfg.output, &ensemble_csv(&res), stdout)?;
    let limit = 5.0 * res.stat_scale;
    if let Some((i, d)) = res
        .trace_distance
        .iter()
        .enumerate()
        .find(|(_, &d)| d > limit)
    {
        return Err(CliError::Threshold(format!(
            "trace distance {d} at tau = {} exceeds 5/sqrt(K) = {limit}",
            res.series.tau[i]
        )));
    }
    Ok(())
}

fn write_dumps(
    dir: &Path,
    records: &[(usize, qndsqueeze_core::stochastic::TrajectoryRecord)],
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (i, rec) in records {
        fs::write(dir.join(format!("traj_{i:05}.csv")), trajectory_csv(rec))?;
    }
    Ok(())
}

fn sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&a.dynamics.config)?;
    let d = Defaults {
        n: 10,
        dt: DEFAULT_DT,
        t_max: 1.5,
        law: LawArg::Analytic,
    };
    let cfg = resolve(&a.dynamics, &file, d, false)?;
    let list = a.n_list.clone().or(file.raw("n_list").map(str::to_string));
    let ns = parse_n_list(list.as_deref().unwrap_or("10..100:10"))?;
    let threads = layer(a.threads, file.get("threads")?, 0);
    let points = parallel::with_threads(threads, || {
        parallel::sweep(&ns, &cfg.params, |n| cfg.law_for(n))
    })??;

    let rows: Vec<SweepRow> = points
        .into_iter()
        .map(|p| SweepRow {
            n: p.n,
            outcome: p.minimum.map_err(|e| e.to_string()),
        })
        .collect();
    let good: Vec<(u32, f64)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.n, m.xi2_min)))
        .collect();
    let (fit, fit_err) = match fit_inverse_scaling(&good) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    emit(
        &cfg.output,
        &sweep_csv(&rows, fit.as_ref(), fit_err.as_deref()),
        stdout,
    )?;
    if let Some(r) = rows.iter().find(|r| r.outcome.is_err()) {
        return Err(CliError::Core(qndsqueeze_core::Error::BoundaryMinimum {
            index: r.n as usize,
        }));
    }
    Ok(())
}

pub fn design_inputs(a: &DesignArgs) -> Result<DesignInputs, CliError> {
    let file = load_config(&a.config)?;
    let file_preset = file
        .raw("preset")
        .map(|s| {
            PresetArg::from_str(s, true)
                .map_err(|_| CliError::Validation(format!("unknown preset `{s}`")))
        })
        .transpose()?;
    let file_regime = file
        .raw("regime")
        .map(|s| {
            RegimeArg::from_str(s, true)
                .map_err(|_| CliError::Validation(format!("unknown regime `{s}`")))
        })
        .transpose()?;
    let mut p = ExperimentalParams::cesium();
    if a.preset.or(file_preset).is_none() {
        p.area = None;
    }
    p.regime = match layer(a.regime, file_regime, RegimeArg::Freespace) {
        RegimeArg::Cavity => Regime::Cavity,
        RegimeArg::Freespace => Regime::FreeSpace,
    };
    p.n_atoms = layer(a.n, file.get("n")?, p.n_atoms);
    p.gamma = layer(a.gamma, file.get("gamma")?, p.gamma);
    p.kappa = a.kappa.or(file.get("kappa")?).or(p.kappa);
    p.coupling_g = a.g.or(file.get("g")?).or(p.coupling_g);
    p.wavelength = layer(a.wavelength, file.get("wavelength")?, p.wavelength);
    p.area = a.area.or(file.get("area")?).or(p.area);
    if a.area_min || file.get_bool("area_min")?.unwrap_or(false) {
        p.area = Some(diffraction_area(p.wavelength));
    }
    p.power = layer(a.power, file.get("power")?, p.power);
    p.detuning = layer(a.detuning, file.get("detuning")?, p.detuning);
    p.omega = a.omega.or(file.get("omega")?).or(p.omega);
    p.feedback_delay = a
        .feedback_delay
        .or(file.get("feedback_delay")?)
        .or(p.feedback_delay);
    Ok(DesignInputs {
        params: p,
        alpha_override: a.alpha_override.or(file.get("alpha_override")?),
        epsilon: layer(a.epsilon, file.get("epsilon")?, 0.2),
    })
}

fn design(a: &DesignArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let inputs = design_inputs(a)?;
    let report = design_report(&inputs)?;
    let file = load_config(&a.config)?;
    let output = a.output.clone().or(file.get::<PathBuf>("output")?);
    emit(&output, &report.render(), stdout)
}
