//! `nlpspeed` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlpspeed::model::DecayRate;
use nlpspeed_cli::commands::{cmd_compare, cmd_hj, cmd_simulate, cmd_speeds, cmd_sweep};
use nlpspeed_cli::config::{load, preset_or_err, Overrides, ScenarioConfig};
use nlpspeed_cli::sweep::SweepSpec;
use nlpspeed_cli::{CliError, Result};

/// Spreading speeds of a three-species competition-diffusion system.
#[derive(Debug, Parser)]
#[command(name = "nlpspeed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explicit speeds, grid free boundaries and hypothesis verdicts.
    Speeds(Common),
    /// Speed-space solution (rho.csv) from the grid solver and the oracle.
    Hj(Common),
    /// Simulate the system and track fronts (snapshots.csv, fronts.csv).
    Simulate(Common),
    /// Full pipeline with pass/fail checks (report.json).
    Compare(Common),
    /// Vary one parameter over a range (sweep.csv).
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in scenario: fig1a, fig1b, fig2a, fig2b, fig2c, fig2d or kpp.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of simulation grid points.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Final simulation time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Number of speed-space grid intervals.
    #[arg(long)]
    hj_n: Option<usize>,
    /// Decay rate of the initial datum of u3 (a positive number or "inf").
    #[arg(long)]
    lambda: Option<String>,
    /// Override a model coefficient, e.g. `--set a21=0.3` (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter to vary: lambda or a model coefficient.
    #[arg(long)]
    axis: String,
    /// Range as `FROM,TO`.
    #[arg(long, value_name = "FROM,TO")]
    range: String,
    /// Number of evenly spaced points.
    #[arg(long, default_value_t = 11)]
    points: usize,
    /// Also simulate and compare at every point.
    #[arg(long)]
    with_pde: bool,
    /// Worker threads (default: all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn parse_number(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: `{text}` is not a number")))
}

fn parse_lambda(text: &str) -> Result<DecayRate> {
    match text.trim() {
        "inf" | "infinite" | "Infinite" => Ok(DecayRate::Infinite),
        other => DecayRate::finite(parse_number(other, "--lambda")?)
            .map_err(|e| CliError::Config(e.to_string())),
    }
}

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let base = match (&self.scenario, &self.config) {
            (Some(name), None) => preset_or_err(name)?,
            (None, Some(path)) => load(path)?,
            _ => return Err(CliError::Config("give exactly one of --scenario or --config".into())),
        };
        let set = self
            .set
            .iter()
            .map(|kv| {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--set expects NAME=VALUE, got `{kv}`")))?;
                Ok((k.trim().to_string(), parse_number(v, "--set")?))
            })
            .collect::<Result<Vec<_>>>()?;
        let overrides = Overrides {
            out: self.out.clone(),
            grid_n: self.grid_n,
            t_final: self.t_final,
            hj_n: self.hj_n,
            lambda: self.lambda.as_deref().map(parse_lambda).transpose()?,
            set,
        };
        base.with_overrides(&overrides)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Speeds(c) => cmd_speeds(&c.resolve()?).map(|_| ()),
        Command::Hj(c) => cmd_hj(&c.resolve()?).map(|_| ()),
        Command::Simulate(c) => cmd_simulate(&c.resolve()?),
        Command::Compare(c) => cmd_compare(&c.resolve()?).map(|_| ()),
        Command::Sweep(s) => {
            let cfg = s.common.resolve()?;
            let (from, to) = s
                .range
                .split_once(',')
                .ok_or_else(|| CliError::Config(format!("--range expects FROM,TO, got `{}`", s.range)))?;
            let spec = SweepSpec {
                axis: s.axis,
                from: parse_number(from, "--range")?,
                to: parse_number(to, "--range")?,
                points: s.points,
                with_pde: s.with_pde,
                workers: s.workers,
            };
            cmd_sweep(&cfg, &spec)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
