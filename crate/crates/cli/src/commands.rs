//! The five subcommand implementations. Each takes one expanded config
//! point, writes its outputs under the given directory, and returns the
//! relative output paths plus a JSON info blob for the manifest.

use crate::config::{
    parse_point, BifurcationConfig, DensityConfig, EquilibriaConfig, PortraitConfig,
    SimulateConfig, SweepPoint,
};
use crate::output;
use crate::CliError;
use levy_rosmac::fpe::{self, solve_stationary};
use levy_rosmac::integrate::{ensemble_stats, phase_portrait, run_ensemble};
use levy_rosmac::model::{coexistence_exists, equilibria, State};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::Path;

pub struct PointOutcome {
    pub outputs: Vec<String>,
    pub resolved_config: Value,
    pub info: Value,
    /// Set when a density solve stopped on max_steps.
    pub non_converged: bool,
    /// (diverged, total) trajectory counts for simulate runs.
    pub trajectory_counts: Option<(usize, usize)>,
}

impl PointOutcome {
    fn new(resolved_config: Value) -> Self {
        PointOutcome {
            outputs: Vec::new(),
            resolved_config,
            info: Value::Null,
            non_converged: false,
            trajectory_counts: None,
        }
    }
}

fn resolved<T: Serialize>(config: &T) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn rel(dir: &Path, root: &Path, name: &str) -> String {
    let sub = dir.strip_prefix(root).unwrap_or(dir);
    if sub.as_os_str().is_empty() {
        name.to_string()
    } else {
        format!("{}/{name}", sub.display())
    }
}

pub fn run_equilibria(
    point: &SweepPoint,
    dir: &Path,
    root: &Path,
) -> Result<PointOutcome, CliError> {
    let cfg: EquilibriaConfig = parse_point(point)?;
    let params = cfg.params.to_params();
    params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = PointOutcome::new(resolved(&cfg));

    let reports = equilibria(&params);
    let coexists = coexistence_exists(&params);
    let doc = json!({
        "params": params,
        "coexistence_exists": coexists,
        "equilibria": reports,
    });
    fs::write(dir.join("equilibria.json"), serde_json::to_string_pretty(&doc).unwrap())?;
    out.outputs.push(rel(dir, root, "equilibria.json"));

    for report in &reports {
        println!(
            "  {:?} at ({:.4}, {:.4}): {:?}, eigenvalues {:.4}{:+.4}i, {:.4}{:+.4}i",
            report.kind,
            report.point.x,
            report.point.y,
            report.stability,
            report.eigenvalues.0.re,
            report.eigenvalues.0.im,
            report.eigenvalues.1.re,
            report.eigenvalues.1.im,
        );
    }
    out.info = json!({"n_equilibria": reports.len(), "coexistence_exists": coexists});
    Ok(out)
}

pub fn run_bifurcation(
    point: &SweepPoint,
    dir: &Path,
    root: &Path,
) -> Result<PointOutcome, CliError> {
    let cfg: BifurcationConfig = parse_point(point)?;
    if !(cfg.r_min > 0.0) || !(cfg.r_max > cfg.r_min) || cfg.n_points < 2 {
        return Err(CliError::Config(format!(
            "need 0 < r_min < r_max and n_points >= 2, got r_min={} r_max={} n_points={}",
            cfg.r_min, cfg.r_max, cfg.n_points
        )));
    }
    let mut out = PointOutcome::new(resolved(&cfg));
    // mu plays no role in the curve, any positive value validates
    let params = levy_rosmac::model::ModelParams {
        r: cfg.r_min,
        mu: 0.1,
        c: cfg.c,
        e: cfg.e,
        cmax: cfg.cmax,
        k: cfg.k,
    };
    params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<(f64, f64)> = (0..cfg.n_points)
        .map(|i| {
            let t = i as f64 / (cfg.n_points - 1) as f64;
            let r = cfg.r_min + t * (cfg.r_max - cfg.r_min);
            (r, levy_rosmac::model::bifurcation_mu(r, &params))
        })
        .collect();
    output::write_bifurcation_csv(&dir.join("bifurcation.csv"), &rows)?;
    out.outputs.push(rel(dir, root, "bifurcation.csv"));
    out.info = json!({"rows": rows.len()});
    println!("  wrote {} curve points", rows.len());
    Ok(out)
}

pub fn run_portrait(
    point: &SweepPoint,
    dir: &Path,
    root: &Path,
) -> Result<PointOutcome, CliError> {
    let cfg: PortraitConfig = parse_point(point)?;
    let params = cfg.params.to_params();
    let initials: Vec<State> = cfg.initials.iter().map(|p| State::new(p[0], p[1])).collect();
    if initials.is_empty() {
        return Err(CliError::Config("initials must be non-empty".into()));
    }
    let mut out = PointOutcome::new(resolved(&cfg));

    let trajectories =
        phase_portrait(&params, &initials, cfg.t_end).map_err(|e| CliError::Config(e.to_string()))?;
    let mut files = Vec::new();
    let mut diverged = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        let name = format!("trajectory_{i:03}.csv");
        output::write_trajectory_csv(&dir.join(&name), traj)?;
        out.outputs.push(rel(dir, root, &name));
        files.push(name);
        if traj.diverged {
            diverged.push(i);
        }
    }
    let reports = equilibria(&params);
    output::write_portrait_script(&dir.join("portrait.gp"), &files, &reports)?;
    out.outputs.push(rel(dir, root, "portrait.gp"));
    out.info = json!({
        "n_trajectories": trajectories.len(),
        "diverged_trajectories": diverged,
    });
    println!("  wrote {} trajectories + portrait.gp", trajectories.len());
    Ok(out)
}

pub fn run_simulate(
    point: &SweepPoint,
    dir: &Path,
    root: &Path,
) -> Result<PointOutcome, CliError> {
    let cfg: SimulateConfig = parse_point(point)?;
    let sim = cfg.to_sim_config();
    sim.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.n_traj == 0 {
        return Err(CliError::Config("n_traj must be >= 1".into()));
    }
    let mut out = PointOutcome::new(resolved(&cfg));

    let ensemble =
        run_ensemble(&sim, cfg.n_traj).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.write_trajectories {
        for (i, traj) in ensemble.trajectories.iter().enumerate() {
            let name = format!("trajectory_{i:03}.csv");
            output::write_trajectory_csv(&dir.join(&name), traj)?;
            out.outputs.push(rel(dir, root, &name));
        }
    }
    let stats = ensemble_stats(&ensemble);
    output::write_stats_csv(&dir.join("stats.csv"), &stats)?;
    out.outputs.push(rel(dir, root, "stats.csv"));

    let diverged: Vec<usize> = ensemble
        .trajectories
        .iter()
        .enumerate()
        .filter(|(_, t)| t.diverged)
        .map(|(i, _)| i)
        .collect();
    out.trajectory_counts = Some((diverged.len(), cfg.n_traj));
    println!(
        "  {} trajectories ({} diverged), stats over {} recorded times",
        cfg.n_traj,
        diverged.len(),
        stats.times.len()
    );
    out.info = json!({
        "n_traj": cfg.n_traj,
        "n_flagged": diverged.len(),
        "diverged_trajectories": diverged,
    });
    Ok(out)
}

pub fn run_density(point: &SweepPoint, dir: &Path, root: &Path) -> Result<PointOutcome, CliError> {
    let cfg: DensityConfig = parse_point(point)?;
    let fpe_config = cfg.to_fpe_config();
    fpe_config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = PointOutcome::new(resolved(&cfg));

    let result = solve_stationary(&fpe_config).map_err(|e| CliError::Config(e.to_string()))?;

    let data = dir.join("density.dat");
    let file = fs::File::create(&data)?;
    fpe::write_density_matrix(&result.grid, std::io::BufWriter::new(file))?;
    out.outputs.push(rel(dir, root, "density.dat"));

    let meta = json!({
        "config": cfg,
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "converged": result.converged,
        "dt": result.dt,
        "residual_history": result.residual_history,
        "mode": result.grid.mode(),
        "peak": result.grid.max_value(),
    });
    fs::write(
        dir.join("density_meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    out.outputs.push(rel(dir, root, "density_meta.json"));

    output::write_density_script(
        &dir.join("density.gp"),
        "density.dat",
        result.grid.x_min,
        result.grid.y_min,
        result.grid.hx(),
        result.grid.hy(),
    )?;
    out.outputs.push(rel(dir, root, "density.gp"));

    let mode = result.grid.mode();
    println!(
        "  {} after {} steps (residual {:.3e}), mode ({:.3}, {:.3})",
        if result.converged { "converged" } else { "NOT converged" },
        result.iterations,
        result.final_residual,
        mode.x,
        mode.y
    );
    out.non_converged = !result.converged;
    out.info = json!({
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "converged": result.converged,
    });
    Ok(out)
}
