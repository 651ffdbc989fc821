//! Command-line surface of the bi-Poisson toolkit.
//!
//! `simulate` writes one exact path as an event CSV plus an optional dense
//! `(t, X_t)` grid, `kernel` prints a forward or bridge law as JSON, `mgf`
//! evaluates a joint moment generating function, and `verify` runs a
//! verification suite and exits non-zero if any claim fails.
//!
//! Exit codes: 0 when everything passes, 1 when a claim fails or an output
//! cannot be written, 2 on usage errors.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use bipoisson::bridge::{bridge_law, bridge_log_mass, conditional_moments, BridgeQuery};
use bipoisson::kernel::conditional_mgf;
use bipoisson::trajectory::{simulate_by_representation, simulate_forward, Construction};
use bipoisson::verify::{joint_log_mgf, run_suite, JointMgfQuery, Suite};
use bipoisson::{forward_kernel, KernelQuery, SimRng, State};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use config::{ResolvedParams, RunConfig};
use output::{ClaimCounts, Metadata, TrajectorySummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Whether every checked claim held.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bipoisson",
    version,
    about = "Exact simulation and verification of the bi-Poisson process"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write its events (and optionally a grid of X_t).
    Simulate(SimulateArgs),
    /// Print the law of Z_t given Z_s, or given Z_s and Z_u with --u.
    Kernel(KernelArgs),
    /// Evaluate E exp(sum u_j X_{t_j}) exactly.
    Mgf(MgfArgs),
    /// Run a verification suite and write the reports as JSON.
    Verify(VerifyArgs),
}

/// Flags shared by every command. Each overrides the matching field of the
/// `--config` file.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Process parameter. With --eta, the pair is reduced to theta* = sqrt(eta theta).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self, command: &str) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(self.config.as_deref(), command)?;
        set(&mut c.theta, self.theta);
        set(&mut c.eta, self.eta);
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        Ok(c)
    }
}

fn set<T: Copy>(field: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *field = flag;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Forward,
    Representation,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Forward => Construction::Forward,
            ConstructionArg::Representation => Construction::Representation,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Final time T > 1.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Half-width of the unresolved window around t = 1.
    #[arg(long)]
    pub window: Option<f64>,
    /// Cap on simulated jumps per phase.
    #[arg(long)]
    pub k_max: Option<u64>,
    #[arg(long, value_enum)]
    pub construction: Option<ConstructionArg>,
    /// Event CSV path; stdout when absent.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Grid CSV path for (t, X_t).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Z_s: an integer off s = 1, a positive real at s = 1.
    #[arg(long)]
    pub z: Option<f64>,
    /// Right end of a bridge; needs --z-u.
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub z_u: Option<f64>,
    /// Also print log masses of Z_t = 0..=K.
    #[arg(long)]
    pub mass_max: Option<u64>,
    /// Also print E[exp(v Z_t) | Z_s] at this v (forward kernels only).
    #[arg(long, allow_hyphen_values = true)]
    pub mgf: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct MgfArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Increasing positive times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Vec<f64>,
    /// One argument u_j per time, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub args: Vec<f64>,
}

#[derive(Debug, Default, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ck, harness, inversion, moments, limits, representation, hitting or all.
    #[arg(long)]
    pub suite: Option<Suite>,
    /// Paths per Monte Carlo repetition.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Paths for the moment checks.
    #[arg(long)]
    pub moment_samples: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<u64>,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Runs a parsed command. Data goes to `out`, human-readable progress to
/// `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, out, err),
        Command::Kernel(a) => cmd_kernel(a, out),
        Command::Mgf(a) => cmd_mgf(a, out),
        Command::Verify(a) => cmd_verify(a, out, err),
    }
}

/// Parses `argv`, runs, and maps the result to an exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, out, err) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn metadata<'a>(
    command: &'a str,
    resolved: &ResolvedParams,
    config: &'a RunConfig,
) -> Metadata<'a> {
    Metadata {
        tool: "bipoisson",
        version: env!("CARGO_PKG_VERSION"),
        command,
        theta: resolved.params.theta(),
        reduction: resolved.reduction,
        config,
        trajectory: None,
        claims: None,
    }
}

pub fn cmd_simulate(
    a: &SimulateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let mut c = a.common.load("simulate")?;
    if let Some(h) = a.horizon {
        c.horizon = h;
    }
    if let Some(w) = a.window {
        c.window = w;
    }
    if let Some(k) = a.k_max {
        c.k_max = k;
    }
    if let Some(con) = a.construction {
        c.construction = con.into();
    }
    if let Some(g) = a.grid_points {
        c.grid_points = g;
    }
    if a.events.is_some() {
        c.events.clone_from(&a.events);
    }
    if a.grid.is_some() {
        c.grid.clone_from(&a.grid);
    }
    let resolved = c.resolve_params()?;
    let sim = c.simulation()?;
    let mut rng = SimRng::new(c.seed);
    let path = match c.construction {
        Construction::Forward => simulate_forward(&resolved.params, &sim, &mut rng),
        Construction::Representation => {
            simulate_by_representation(&resolved.params, &sim, &mut rng)
        }
    }
    .map_err(usage)?;

    let summary = TrajectorySummary::new(&path);
    let _ = writeln!(
        err,
        "theta = {}: {} births (truncated: {}), Z_1 = {:.6}, {} deaths to T = {} (truncated: {}), Z_T = {}",
        resolved.params.theta(),
        summary.birth_events,
        summary.birth_truncated,
        summary.z1,
        summary.death_events_to_horizon,
        c.horizon,
        summary.death_truncated,
        summary.count_at_horizon,
    );
    let mut meta = metadata("simulate", &resolved, &c);
    meta.trajectory = Some(summary);
    let events = output::events_csv(&path);
    match &c.events {
        Some(p) => output::write_with_meta(p, &events, &meta)?,
        None => emit(out, &events)?,
    }
    if let Some(p) = &c.grid {
        output::write_with_meta(p, &output::grid_csv(&path, c.grid_points), &meta)?;
    }
    Ok(Outcome::Pass)
}

/// Reads `Z` at time `time`: integer-valued off `t = 1`, a positive real at 1.
fn state_at(time: f64, z: f64, flag: &str) -> Result<State, CliError> {
    if time == 1.0 {
        return Ok(State::Level(z));
    }
    if z >= 0.0 && z.fract() == 0.0 && z <= u64::MAX as f64 {
        Ok(State::Count(z as u64))
    } else {
        Err(CliError::Usage(format!(
            "{flag} = {z}: Z at time {time} is a non-negative integer (only Z_1 is real)"
        )))
    }
}

#[derive(Serialize)]
struct MassRow {
    z: u64,
    log_mass: f64,
}

#[derive(Serialize)]
struct KernelOutput {
    theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduction: Option<bipoisson::Reduction>,
    s: f64,
    t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    z_s: State,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_u: Option<State>,
    case: String,
    law: bipoisson::TransitionLaw,
    /// `Z_t - offset` follows `law`.
    offset: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<bipoisson::Orientation>,
    /// Conditional mean and variance of `X_t`.
    x_mean: f64,
    x_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mgf: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mass: Vec<MassRow>,
}

pub fn cmd_kernel(a: &KernelArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut c = a.common.load("kernel")?;
    set(&mut c.s, a.s);
    set(&mut c.t, a.t);
    set(&mut c.z, a.z);
    set(&mut c.u, a.u);
    set(&mut c.z_u, a.z_u);
    set(&mut c.mass_max, a.mass_max);
    let resolved = c.resolve_params()?;
    let params = &resolved.params;
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("kernel needs --{flag}")))
    };
    let (s, t, z) = (need(c.s, "s")?, need(c.t, "t")?, need(c.z, "z")?);
    let z_s = state_at(s, z, "--z")?;
    let theta = params.theta();
    let x_of = |time: f64, mean: f64, var: f64| {
        let slope = if time == 1.0 {
            theta
        } else {
            theta * (1.0 - time).abs()
        };
        let shift = if time < 1.0 {
            -time / theta
        } else {
            -1.0 / theta
        };
        (slope * mean + shift, slope * slope * var)
    };

    let result = match c.u {
        None => {
            let q = KernelQuery::new(s, t, z_s).map_err(usage)?;
            let k = forward_kernel(params, &q).map_err(usage)?;
            let (mean, var) = k.moments();
            let (x_mean, x_variance) = x_of(t, mean, var);
            let mgf = match a.mgf {
                Some(v) => Some([v, conditional_mgf(params, s, t, z_s, v).map_err(usage)?]),
                None => None,
            };
            let mass = match c.mass_max {
                Some(kmax) if t != 1.0 => (0..=kmax)
                    .map(|z| {
                        Ok(MassRow {
                            z,
                            log_mass: k.log_mass(State::Count(z)).map_err(usage)?,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
                Some(_) => {
                    return Err(CliError::Usage(
                        "--mass-max needs an integer-valued Z_t (t != 1)".into(),
                    ))
                }
                None => Vec::new(),
            };
            KernelOutput {
                theta,
                reduction: resolved.reduction,
                s,
                t,
                u: None,
                z_s,
                z_u: None,
                case: serde_json::to_value(k.case)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                law: k.law,
                offset: k.offset,
                orientation: None,
                x_mean,
                x_variance,
                mgf,
                mass,
            }
        }
        Some(u) => {
            if a.mgf.is_some() {
                return Err(CliError::Usage(
                    "--mgf applies to forward kernels only".into(),
                ));
            }
            let z_u = state_at(u, need(c.z_u, "z-u")?, "--z-u")?;
            let q = BridgeQuery::new(s, t, u, z_s, z_u).map_err(usage)?;
            let b = bridge_law(params, &q).map_err(usage)?;
            let (x_mean, x_variance) = conditional_moments(params, &q).map_err(usage)?;
            let mass = match c.mass_max {
                Some(kmax) => (0..=kmax)
                    .map(|z| {
                        Ok(MassRow {
                            z,
                            log_mass: bridge_log_mass(params, &q, z).map_err(usage)?,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
                None => Vec::new(),
            };
            KernelOutput {
                theta,
                reduction: resolved.reduction,
                s,
                t,
                u: Some(u),
                z_s,
                z_u: Some(z_u),
                case: b.case.name().to_owned(),
                law: b.law,
                offset: b.offset,
                orientation: Some(b.orientation),
                x_mean,
                x_variance,
                mgf: None,
                mass,
            }
        }
    };
    emit(out, &json_line(&result))?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct MgfOutput {
    theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduction: Option<bipoisson::Reduction>,
    times: Vec<f64>,
    args: Vec<f64>,
    log_mgf: f64,
    mgf: f64,
}

pub fn cmd_mgf(a: &MgfArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut c = a.common.load("mgf")?;
    if !a.times.is_empty() {
        c.times.clone_from(&a.times);
    }
    if !a.args.is_empty() {
        c.args.clone_from(&a.args);
    }
    let resolved = c.resolve_params()?;
    let theta = resolved.params.theta();
    let query = JointMgfQuery::new(theta, c.times.clone(), c.args.clone()).map_err(usage)?;
    let log_mgf = joint_log_mgf(&query).map_err(usage)?;
    emit(
        out,
        &json_line(&MgfOutput {
            theta,
            reduction: resolved.reduction,
            times: c.times,
            args: c.args,
            log_mgf,
            mgf: log_mgf.exp(),
        }),
    )?;
    Ok(Outcome::Pass)
}

pub fn cmd_verify(
    a: &VerifyArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let mut c = a.common.load("verify")?;
    set(&mut c.suite, a.suite);
    set(&mut c.samples, a.samples);
    set(&mut c.moment_samples, a.moment_samples);
    set(&mut c.repetitions, a.repetitions);
    if a.report.is_some() {
        c.report.clone_from(&a.report);
    }
    let resolved = c.resolve_params()?;
    let suite = c.suite.unwrap_or(Suite::All);
    let config = c.suite_config(resolved.params.theta());
    let reports = run_suite(suite, &config).map_err(usage)?;
    for r in &reports {
        let _ = writeln!(err, "{}", r.summary());
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let _ = writeln!(err, "{passed}/{} claims passed", reports.len());
    let json = json_line(&reports);
    match &c.report {
        Some(p) => {
            let mut meta = metadata("verify", &resolved, &c);
            meta.claims = Some(ClaimCounts {
                total: reports.len(),
                passed,
            });
            output::write_with_meta(p, &json, &meta)?;
        }
        None => emit(out, &json)?,
    }
    Ok(if passed == reports.len() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
