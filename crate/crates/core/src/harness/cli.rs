use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::simulator::{substream, write_realization_csv, Simulator};

use super::{
    check_point, emit_csv, preset, run_points, run_sweep, scenario_at, sweep_points, ConfigFile,
    Method, Overrides, Row,
};

const DUMP_STREAM: u64 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "coopcache",
    version,
    about = "Cooperative UAV caching: placement, capacity and energy efficiency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the single scenario of a config file (its [sweep] section is ignored).
    Run(RunArgs),
    /// Evaluate a sweep from a config file or a built-in preset.
    Sweep(SweepArgs),
    /// Parse and validate a config file without evaluating it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides simulation.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per point (overrides simulation.trials).
    #[arg(long)]
    pub trials: Option<u64>,
    /// analytic, monte_carlo or both.
    #[arg(long)]
    pub method: Option<Method>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            method: self.method,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the placement policy as CSV.
    #[arg(long)]
    pub policy_out: Option<PathBuf>,
    /// Also write one sampled network realization (request of content 1) as CSV.
    #[arg(long)]
    pub dump_realization: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// capacity_vs_radius, policy_comparison, ee_vs_radius or ee_vs_altitude.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

fn finish(rows: &[Row], out: Option<&Path>) -> Result<ExitCode> {
    emit_csv(rows, out)?;
    let failed: Vec<&Row> = rows.iter().filter(|r| r.failed()).collect();
    for row in &failed {
        if let Err(msg) = &row.outcome {
            eprintln!(
                "scenario {} ({}) failed: {msg}",
                row.scenario_id, row.method
            );
        }
    }
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    cfg.sweep = None;
    args.common.overrides().apply(&mut cfg)?;
    let points = sweep_points(&cfg)?;
    let point = points[0];
    if args.policy_out.is_some() || args.dump_realization.is_some() {
        let scenario = scenario_at(&cfg, &point)?;
        if let Some(path) = &args.policy_out {
            scenario
                .policy
                .write_csv(create(path)?)
                .map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
        }
        if let Some(path) = &args.dump_realization {
            let sim = Simulator::new(scenario, cfg.simulation.sim_config())?;
            let mut rng = substream(cfg.simulation.seed, DUMP_STREAM, 0, 0);
            let mut net = sim.sample_realization(0, &mut rng)?;
            net.seed = cfg.simulation.seed;
            write_realization_csv(&net, create(path)?)?;
        }
    }
    let method = args.common.method.unwrap_or(Method::Analytic);
    let rows = run_points(&cfg, &points, &[method]);
    finish(&rows, args.common.out.as_deref())
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ConfigFile::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(Error::Config(
                "either --config or --preset is required".into(),
            ))
        }
    };
    if cfg.sweep.is_none() {
        return Err(Error::Config(
            "sweep: the file has no [sweep] section".into(),
        ));
    }
    args.common.overrides().apply(&mut cfg)?;
    let rows = run_sweep(&cfg)?;
    finish(&rows, args.common.out.as_deref())
}

fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    let cfg = ConfigFile::load(&args.config)?;
    let points = sweep_points(&cfg)?;
    for point in &points {
        check_point(&cfg, point)?;
    }
    println!(
        "{}: ok ({} scenario point{})",
        args.config.display(),
        points.len(),
        if points.len() == 1 { "" } else { "s" }
    );
    Ok(ExitCode::SUCCESS)
}

pub fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
