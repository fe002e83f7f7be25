//! levy-rosmac: analysis front end for the Rosenzweig-MacArthur model under
//! alpha-stable Levy noise. Subcommands take a JSON config (optionally with
//! a `sweep` block) and write CSV/JSON/matrix outputs plus a replayable
//! manifest into the output directory.

mod commands;
mod config;
mod manifest;
mod output;

use clap::{Args, Parser, Subcommand};
use config::SweepPoint;
use manifest::{csv_schemas, ResolvedPoint, RunManifest, MANIFEST_SCHEMA_VERSION};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid configuration (exit 2).
    Config(String),
    /// Filesystem trouble (exit 1).
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser)]
#[command(
    name = "levy-rosmac",
    version,
    about = "Rosenzweig-MacArthur prey-predator analysis under alpha-stable Levy noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file, or a previous run's manifest.json to replay
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config (stochastic subcommands)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium points, eigenvalues and stability classes (JSON report)
    Equilibria(CommonArgs),
    /// Transcritical bifurcation curve mu_T(r) as CSV
    Bifurcation(CommonArgs),
    /// Deterministic phase portraits (CSV per initial + gnuplot script)
    Portrait(CommonArgs),
    /// Monte Carlo trajectory ensembles (trajectory CSVs + stats CSV)
    Simulate(CommonArgs),
    /// Stationary density of the non-local Fokker-Planck equation
    Density(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Equilibria(_) => "equilibria",
            Command::Bifurcation(_) => "bifurcation",
            Command::Portrait(_) => "portrait",
            Command::Simulate(_) => "simulate",
            Command::Density(_) => "density",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Equilibria(a)
            | Command::Bifurcation(a)
            | Command::Portrait(a)
            | Command::Simulate(a)
            | Command::Density(a) => a,
        }
    }
}

fn init_thread_pool() {
    if let Ok(text) = std::env::var("LEVY_ROSMAC_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn point_dir(root: &Path, index: usize, sweeping: bool) -> PathBuf {
    if sweeping {
        root.join(format!("sweep_{index:03}"))
    } else {
        root.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let start = Instant::now();
    let name = cli.command.name();
    let args = cli.command.args();

    let mut doc = config::unwrap_manifest(config::load_json(&args.config)?);
    if let Some(seed) = args.seed {
        match &mut doc {
            serde_json::Value::Object(map) => {
                map.insert("seed".into(), serde_json::json!(seed));
            }
            _ => return Err(CliError::Config("config must be a JSON object".into())),
        }
    }
    let points = config::expand_sweep(&doc)?;
    let sweeping = points.len() > 1 || !points[0].assignment.is_empty();

    std::fs::create_dir_all(&args.out)?;

    let mut resolved_points = Vec::new();
    let mut outputs = Vec::new();
    let mut any_non_converged = false;
    let mut total_diverged = 0usize;
    let mut total_traj = 0usize;

    for (index, point) in points.iter().enumerate() {
        let dir = point_dir(&args.out, index, sweeping);
        std::fs::create_dir_all(&dir)?;
        if sweeping {
            let labels: Vec<String> = point
                .assignment
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            println!("[{name}] point {index}: {}", labels.join(", "));
        } else {
            println!("[{name}]");
        }
        let outcome = run_point(name, point, &dir, &args.out)?;
        any_non_converged |= outcome.non_converged;
        if let Some((d, n)) = outcome.trajectory_counts {
            total_diverged += d;
            total_traj += n;
        }
        outputs.extend(outcome.outputs);
        resolved_points.push(ResolvedPoint {
            dir: dir
                .strip_prefix(&args.out)
                .unwrap_or(Path::new(""))
                .display()
                .to_string(),
            sweep: point.assignment.clone(),
            config: outcome.resolved_config,
            info: outcome.info,
        });
    }

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        seed: args.seed,
        config: doc,
        points: resolved_points,
        outputs,
        csv_schemas: csv_schemas(),
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out)?;
    println!(
        "[{name}] done in {:.2}s, manifest at {}",
        manifest.duration_seconds,
        args.out.join("manifest.json").display()
    );

    if total_traj > 0 && total_diverged == total_traj {
        eprintln!("[{name}] every trajectory hit the divergence guard");
        return Ok(4);
    }
    if any_non_converged {
        eprintln!("[{name}] stationary solve did not reach the tolerance (outputs written)");
        return Ok(3);
    }
    Ok(0)
}

fn run_point(
    name: &str,
    point: &SweepPoint,
    dir: &Path,
    root: &Path,
) -> Result<commands::PointOutcome, CliError> {
    match name {
        "equilibria" => commands::run_equilibria(point, dir, root),
        "bifurcation" => commands::run_bifurcation(point, dir, root),
        "portrait" => commands::run_portrait(point, dir, root),
        "simulate" => commands::run_simulate(point, dir, root),
        "density" => commands::run_density(point, dir, root),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
