//! CSV and gnuplot-script writers.

use levy_rosmac::integrate::{EnsembleStats, Trajectory};
use levy_rosmac::model::EquilibriumReport;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut text = String::with_capacity(traj.times.len() * 32 + 16);
    text.push_str("t,X,Y\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        writeln!(text, "{t},{},{}", s.x, s.y).unwrap();
    }
    fs::write(path, text)
}

pub fn write_bifurcation_csv(path: &Path, rows: &[(f64, f64)]) -> io::Result<()> {
    let mut text = String::from("r,mu\n");
    for (r, mu) in rows {
        writeln!(text, "{r},{mu}").unwrap();
    }
    fs::write(path, text)
}

pub fn write_stats_csv(path: &Path, stats: &EnsembleStats) -> io::Result<()> {
    let mut text =
        String::from("t,mean_X,median_X,iqr_X,min_X,max_X,mean_Y,median_Y,iqr_Y,min_Y,max_Y\n");
    for ((t, x), y) in stats.times.iter().zip(&stats.x).zip(&stats.y) {
        writeln!(
            text,
            "{t},{},{},{},{},{},{},{},{},{},{}",
            x.mean, x.median, x.iqr, x.min, x.max, y.mean, y.median, y.iqr, y.min, y.max
        )
        .unwrap();
    }
    fs::write(path, text)
}

/// Gnuplot script plotting trajectory CSVs in the (X, Y) plane with the
/// equilibria marked.
pub fn write_portrait_script(
    path: &Path,
    trajectory_files: &[String],
    equilibria: &[EquilibriumReport],
) -> io::Result<()> {
    let mut text = String::new();
    text.push_str("# phase portrait; run: gnuplot -persist portrait.gp\n");
    text.push_str("set datafile separator \",\"\n");
    text.push_str("set xlabel \"X (prey)\"\nset ylabel \"Y (predator)\"\nset key off\n");
    text.push_str("plot \\\n");
    for file in trajectory_files {
        writeln!(text, "  \"{file}\" using 2:3 with lines lc rgb \"#4477aa\", \\").unwrap();
    }
    text.push_str("  \"-\" using 1:2 with points pt 7 ps 1.5 lc rgb \"#cc3311\"\n");
    for report in equilibria {
        writeln!(text, "{} {}", report.point.x, report.point.y).unwrap();
    }
    text.push_str("e\n");
    fs::write(path, text)
}

/// Gnuplot surface script for the density matrix format.
pub fn write_density_script(
    path: &Path,
    data_file: &str,
    x_min: f64,
    y_min: f64,
    hx: f64,
    hy: f64,
) -> io::Result<()> {
    let mut text = String::new();
    text.push_str("# stationary density surface; run: gnuplot -persist density.gp\n");
    text.push_str("set xlabel \"X (prey)\"\nset ylabel \"Y (predator)\"\n");
    text.push_str("set pm3d at s\nset hidden3d\nunset key\n");
    writeln!(
        text,
        "splot \"{data_file}\" matrix using ({x_min}+{hx}*($1+0.5)):({y_min}+{hy}*($2+0.5)):3 with pm3d"
    )
    .unwrap();
    fs::write(path, text)
}
