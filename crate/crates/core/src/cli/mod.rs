//! Experiment runners behind the `qmg1k` binary.
//!
//! Every subcommand is a pure function of its configuration and seed, and
//! writes its output through [`emit`], so repeated invocations produce the
//! same bytes.

mod config;
mod demo;
mod grid;
mod output;
mod sensitivity;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analytic::mm1k_steady_state;
use crate::circuit::{gate_census, Engine, QueueParams, Schedule};
use crate::des::{run_des, DesConfig};
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::metrics::tv_distance;

pub use config::{read_config, ScenarioGrid, SensitivityConfig};
pub use demo::{demo_report, DemoReport};
pub use grid::{grid_cells, grid_csv, grid_row, grid_rows, GridCell, GridRow, RunSettings};
pub use output::{emit, Csv};
pub use sensitivity::{sensitivity_csv, sensitivity_row, SensitivityRow};

#[derive(Debug, Parser)]
#[command(name = "qmg1k", version, about = "Amplitude-amplified M/G/1/K queue experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long, global = true, value_enum)]
    pub schedule: Option<ScheduleArg>,
    #[arg(long, global = true, value_enum)]
    pub rejection: Option<Switch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Single-slice walkthrough of the λ=0.25, K=3, Δt=0.3 example.
    Demo,
    /// Scenario grid against the event-driven baseline (CSV).
    Grid,
    /// Arrival-rate sweep with fidelity residuals (CSV).
    Sensitivity,
    /// Logical gate counts for one parameter set (JSON).
    Census,
    /// Event-driven baseline: one run as JSON, or a grid as CSV with `--grid`.
    Des {
        #[arg(long)]
        grid: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Exact,
    Traced,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Traced => Engine::Traced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Paper,
    Optimal,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Paper => Schedule::Paper,
            ScheduleArg::Optimal => Schedule::Optimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Cli {
    fn apply(&self, s: &mut RunSettings) {
        if let Some(n) = self.shots {
            s.shots = n;
        }
        if let Some(e) = self.engine {
            s.engine = Some(e.into());
        }
        if let Some(x) = self.schedule {
            s.schedule = x.into();
        }
        if let Some(r) = self.rejection {
            s.rejection = r == Switch::On;
        }
    }
}

/// Process exit code for an error: 3 for I/O, 2 for bad configuration or
/// parameters, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 3,
        Error::Config(_) | Error::InvalidParameter(_) | Error::Unsupported(_) | Error::QubitCap { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Demo => cmd_demo(cli, out),
        Command::Grid => {
            let grid = grid_config(cli)?;
            let csv = grid_csv(&grid)?;
            emit(out, csv.as_bytes())
        }
        Command::Sensitivity => {
            let mut cfg: SensitivityConfig = read_config(cli.config.as_deref())?.unwrap_or_default();
            if let Some(s) = cli.seed {
                cfg.seed = Some(s);
            }
            cli.apply(&mut cfg.settings);
            let csv = sensitivity_csv(&cfg)?;
            emit(out, csv.as_bytes())
        }
        Command::Census => {
            let mut p = read_config::<QueueParams>(cli.config.as_deref())?.unwrap_or_else(demo_params);
            if let Some(s) = cli.seed {
                p.seed = s;
            }
            let mut s = RunSettings::from_params(&p);
            cli.apply(&mut s);
            s.write_to(&mut p);
            p.validate()?;
            emit(out, &to_json(&gate_census(&p))?)
        }
        Command::Des { grid: true } => {
            let grid = grid_config(cli)?;
            emit(out, des_grid_csv(&grid)?.as_bytes())
        }
        Command::Des { grid: false } => {
            let mut c = read_config::<DesConfig>(cli.config.as_deref())?.unwrap_or_else(|| {
                DesConfig::new(0.25, ServiceDistribution::Exponential { rate: 1.0 }, 3, 0).with_events(1_000_000)
            });
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            emit(out, &to_json(&run_des(&c)?)?)
        }
    }
}

fn grid_config(cli: &Cli) -> Result<ScenarioGrid> {
    let mut grid: ScenarioGrid = read_config(cli.config.as_deref())?.unwrap_or_default();
    if let Some(s) = cli.seed {
        grid.seed = Some(s);
    }
    if grid.seed.is_none() {
        return Err(Error::Config("grid runs need a seed (--seed or \"seed\" in the config)".into()));
    }
    cli.apply(&mut grid.settings);
    grid.validate()?;
    Ok(grid)
}

fn cmd_demo(cli: &Cli, out: Option<&Path>) -> Result<()> {
    let report = demo_report(cli.shots.unwrap_or(10_000), cli.seed.unwrap_or(2024))?;
    let json = to_json(&report)?;
    let text = report.render();
    match out {
        Some(path) => {
            print!("{text}");
            emit(Some(path), &json)
        }
        None => {
            let mut bytes = text.into_bytes();
            bytes.extend_from_slice(&json);
            emit(None, &bytes)
        }
    }
}

/// λ=0.25, Exp{1}, K=3, Δt=0.3.
pub fn demo_params() -> QueueParams {
    let mut p = QueueParams::new(0.25, ServiceDistribution::Exponential { rate: 1.0 }, 3);
    p.dt = Some(0.3);
    p.seed = 2024;
    p
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// One event-driven run per grid cell, seeded like the first trial of the
/// quantum grid.
pub fn des_grid_csv(grid: &ScenarioGrid) -> Result<String> {
    use rayon::prelude::*;
    let cells = grid_cells(grid)?;
    let base = grid.seed.unwrap_or(0);
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|c| {
            let seed = grid::row_seed(base, c.scenario_id, 0);
            let r = run_des(&DesConfig::new(c.lambda, c.service.clone(), c.k, seed).with_events(grid.des_events))?;
            let tv = match c.service {
                ServiceDistribution::Exponential { rate } => {
                    Some(tv_distance(&r.p_c, &mm1k_steady_state(c.lambda / rate, c.k))?.0)
                }
                _ => None,
            };
            Ok(vec![
                c.scenario_id.to_string(),
                c.lambda.to_string(),
                c.dist_label.to_string(),
                c.k.to_string(),
                r.l.to_string(),
                r.w.to_string(),
                r.p_block.to_string(),
                output::opt(tv),
                seed.to_string(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut csv = Csv::new(&["scenario_id", "lambda", "dist", "K", "L", "W", "p_block", "tv_vs_analytic", "seed"]);
    for r in rows {
        csv.row(r);
    }
    Ok(csv.finish())
}

/// Writes `bytes` to standard output.
pub fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}
