//! Stationary solver for the non-local Fokker-Planck equation of the noisy
//! model on a truncated rectangle.
//!
//! The density evolves under drift transport in conservative (flux) form
//! plus two one-dimensional symmetric alpha-stable jump operators, one per
//! noise channel; the componentwise-independent noise makes the 2-D jump
//! term split exactly into these two 1-D operators. The jump integral is
//! discretized with a second-order Taylor correction on |u| < h (the
//! symmetric measure cancels the first-order term) and midpoint weights
//! c(1,alpha)|u|^(-1-alpha) h on far cells. Density is zero outside the
//! domain; mass jumping out is removed at the exact tail rate of the Levy
//! measure and the remainder renormalized, which is the truncated-domain
//! reading of the unbounded operator.
//!
//! Pseudo-time stepping is explicit with the stability bound
//! dt <= 0.5 / (max|b1|/hx + max|b2|/hy + lambda_x + lambda_y),
//! clipping negative undershoots and renormalizing mass after every step.

use crate::model::{self, ModelParams, State};
use crate::stable::{levy_constant, StableNoiseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// Densities beyond this magnitude before clipping abort the run.
pub const INSTABILITY_GUARD: f64 = 1e6;

const HISTORY_STRIDE: usize = 250;

#[derive(Debug, Error)]
pub enum FpeError {
    #[error("invalid density-solver config: {0}")]
    InvalidConfig(String),
    #[error("stability index must lie in (0, 2) for the jump operator, got {0}")]
    AlphaOutOfRange(f64),
    #[error("dt {dt} exceeds the explicit stability bound {bound}")]
    DtTooLarge { dt: f64, bound: f64 },
    #[error("density exceeded {INSTABILITY_GUARD:e} at step {step}: the update is unstable")]
    Unstable { step: usize },
    #[error("density lost all mass at step {step}")]
    MassVanished { step: usize },
    #[error("density matrix parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A probability density sampled at cell centers of a uniform rectangular
/// grid. `values[j * nx + i]` is the density at
/// (x_min + (i + 1/2) hx, y_min + (j + 1/2) hy).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Uniform density over the domain, mass 1.
    pub fn uniform(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Self {
        let v = 1.0 / ((x_max - x_min) * (y_max - y_min));
        DensityGrid {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            values: vec![v; nx * ny],
        }
    }

    /// Normalized Gaussian bump centered at `center` with the given widths.
    pub fn gaussian_bump(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
        center: State,
        width_x: f64,
        width_y: f64,
    ) -> Self {
        let mut grid = DensityGrid {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        };
        for j in 0..ny {
            let dy = (grid.y_center(j) - center.y) / width_y;
            for i in 0..nx {
                let dx = (grid.x_center(i) - center.x) / width_x;
                grid.values[j * nx + i] = (-0.5 * (dx * dx + dy * dy)).exp();
            }
        }
        grid.normalize();
        grid
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.hx()
    }

    pub fn y_center(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.hy()
    }

    /// Total mass under midpoint quadrature.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.hx() * self.hy()
    }

    /// Scale to unit mass.
    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            let inv = 1.0 / m;
            for v in &mut self.values {
                *v *= inv;
            }
        }
    }

    /// Grid indices of the density maximum (first one in index order).
    pub fn mode_index(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best % self.nx, best / self.nx)
    }

    /// Location of the density maximum in physical coordinates.
    pub fn mode(&self) -> State {
        let (i, j) = self.mode_index();
        State::new(self.x_center(i), self.y_center(j))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn same_geometry(&self, other: &DensityGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.y_min == other.y_min
            && self.y_max == other.y_max
    }

    /// Bilinear resampling onto a new grid over the same domain, mass
    /// renormalized. Used to warm-start a fine solve from a coarse one.
    pub fn resample(&self, nx: usize, ny: usize) -> DensityGrid {
        let mut out = DensityGrid {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        };
        for j in 0..ny {
            let y = out.y_center(j);
            let fy = ((y - self.y_min) / self.hy() - 0.5)
                .clamp(0.0, (self.ny - 1) as f64);
            let j0 = (fy.floor() as usize).min(self.ny - 2);
            let ty = fy - j0 as f64;
            for i in 0..nx {
                let x = out.x_center(i);
                let fx = ((x - self.x_min) / self.hx() - 0.5)
                    .clamp(0.0, (self.nx - 1) as f64);
                let i0 = (fx.floor() as usize).min(self.nx - 2);
                let tx = fx - i0 as f64;
                let v00 = self.values[j0 * self.nx + i0];
                let v10 = self.values[j0 * self.nx + i0 + 1];
                let v01 = self.values[(j0 + 1) * self.nx + i0];
                let v11 = self.values[(j0 + 1) * self.nx + i0 + 1];
                out.values[j * nx + i] = (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10)
                    + ty * ((1.0 - tx) * v01 + tx * v11);
            }
        }
        out.normalize();
        out
    }
}

/// Initial condition for the pseudo-time iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpeInitial {
    /// Gaussian bump centered on the deterministic attractor, widths one
    /// tenth of the domain. Fastest route to the monomodal stationary state.
    GaussianBumpAtAttractor,
    Uniform,
}

/// Full configuration of a stationary solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpeConfig {
    pub params: ModelParams,
    pub noise_x: StableNoiseSpec,
    pub noise_y: StableNoiseSpec,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Pseudo-time step; `None` selects the stability bound automatically.
    pub dt: Option<f64>,
    /// Stationarity tolerance on ||p_{n+1} - p_n||_1 / dt.
    pub tol: f64,
    pub max_steps: usize,
    pub initial: FpeInitial,
}

impl Default for FpeConfig {
    fn default() -> Self {
        FpeConfig {
            params: ModelParams::default(),
            noise_x: StableNoiseSpec::new(1.5, 0.1),
            noise_y: StableNoiseSpec::new(1.5, 0.1),
            x_min: 0.0,
            x_max: 30.0,
            y_min: 0.0,
            y_max: 60.0,
            nx: 150,
            ny: 150,
            dt: None,
            tol: 1e-6,
            max_steps: 400_000,
            initial: FpeInitial::GaussianBumpAtAttractor,
        }
    }
}

impl FpeConfig {
    pub fn validate(&self) -> Result<(), FpeError> {
        self.params
            .validate()
            .map_err(|e| FpeError::InvalidConfig(e.to_string()))?;
        for spec in [&self.noise_x, &self.noise_y] {
            if !(spec.alpha > 0.0 && spec.alpha < 2.0) {
                return Err(FpeError::AlphaOutOfRange(spec.alpha));
            }
            if !(spec.sigma > 0.0) {
                return Err(FpeError::InvalidConfig(format!(
                    "noise intensities must be > 0 for the density solver, got {}",
                    spec.sigma
                )));
            }
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(FpeError::InvalidConfig("domain bounds must be ordered".into()));
        }
        if self.nx < 3 || self.ny < 3 {
            return Err(FpeError::InvalidConfig("grid must be at least 3x3".into()));
        }
        if !(self.tol > 0.0) {
            return Err(FpeError::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_steps == 0 {
            return Err(FpeError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(FpeError::InvalidConfig(format!("dt must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    /// Initial density per the configured choice.
    pub fn initial_grid(&self) -> DensityGrid {
        match self.initial {
            FpeInitial::Uniform => DensityGrid::uniform(
                self.x_min, self.x_max, self.y_min, self.y_max, self.nx, self.ny,
            ),
            FpeInitial::GaussianBumpAtAttractor => {
                let a = model::attractor(&self.params);
                let center = State::new(
                    a.x.clamp(self.x_min, self.x_max),
                    a.y.clamp(self.y_min, self.y_max),
                );
                DensityGrid::gaussian_bump(
                    self.x_min,
                    self.x_max,
                    self.y_min,
                    self.y_max,
                    self.nx,
                    self.ny,
                    center,
                    (self.x_max - self.x_min) / 10.0,
                    (self.y_max - self.y_min) / 10.0,
                )
            }
        }
    }
}

/// One-dimensional jump operator as a dense symmetric-Toeplitz action plus a
/// node-dependent diagonal carrying the in-domain weight sums and the exact
/// exterior-tail leak.
pub(crate) struct JumpKernel {
    n: usize,
    /// Weight by jump distance in cells; w[0] unused, w[1] also carries the
    /// Taylor-zone second-difference coefficient.
    w: Vec<f64>,
    diag: Vec<f64>,
}

/// Fixed-order dot product, unrolled into four lanes so the reduction
/// vectorizes without changing results between runs.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (qa, qb) in ca.by_ref().zip(cb.by_ref()) {
        acc[0] += qa[0] * qb[0];
        acc[1] += qa[1] * qb[1];
        acc[2] += qa[2] * qb[2];
        acc[3] += qa[3] * qb[3];
    }
    let mut rest = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        rest += x * y;
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + rest
}

impl JumpKernel {
    pub(crate) fn new(n: usize, h: f64, spec: &StableNoiseSpec) -> Result<Self, FpeError> {
        if n < 3 {
            return Err(FpeError::InvalidConfig(format!(
                "jump operator needs at least 3 nodes, got {n}"
            )));
        }
        if !(h > 0.0) {
            return Err(FpeError::InvalidConfig(format!("spacing must be > 0, got {h}")));
        }
        let alpha = spec.alpha;
        let c = levy_constant(alpha).map_err(|_| FpeError::AlphaOutOfRange(alpha))?;
        let sa = spec.sigma.powf(alpha);
        let k2_over_h2 = c * h.powf(2.0 - alpha) / (2.0 - alpha) / (h * h);

        // midpoint weights of the Levy density on far cells
        let far: Vec<f64> = (0..n)
            .map(|d| {
                if d == 0 {
                    0.0
                } else {
                    c * h * (d as f64 * h).powf(-1.0 - alpha)
                }
            })
            .collect();
        let mut pref = vec![0.0; n];
        for d in 1..n {
            pref[d] = pref[d - 1] + far[d];
        }

        let mut w = far.clone();
        w[1] += k2_over_h2;
        for v in &mut w {
            *v *= sa;
        }

        let tail = |cells_inside: usize| -> f64 {
            (c / alpha) * ((cells_inside as f64 + 0.5) * h).powf(-alpha)
        };
        let diag: Vec<f64> = (0..n)
            .map(|m| {
                let leak = tail(m) + tail(n - 1 - m);
                -sa * (2.0 * k2_over_h2 + (pref[m] + pref[n - 1 - m]) + leak)
            })
            .collect();

        Ok(JumpKernel { n, w, diag })
    }

    /// Maximum diagonal magnitude, used by the stability bound.
    pub(crate) fn lambda(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    /// Apply to one row. `rev` is scratch of length n holding the reversed
    /// row so that both half-sums run over contiguous memory; summing the
    /// two halves before the diagonal keeps the operator exactly symmetric
    /// under mirroring.
    pub(crate) fn apply_into(&self, row: &[f64], rev: &mut [f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(row.len(), n);
        for (r, v) in rev.iter_mut().zip(row.iter().rev()) {
            *r = *v;
        }
        for m in 0..n {
            let right = dot(&self.w[1..n - m], &row[m + 1..]);
            let left = dot(&self.w[1..=m], &rev[n - m..]);
            out[m] = self.diag[m] * row[m] + (right + left);
        }
    }
}

/// The 1-D symmetric alpha-stable jump operator applied to a density row
/// with spacing `h`: Taylor-corrected second difference inside one cell,
/// midpoint Levy weights to every in-domain cell, zero density outside the
/// domain with the exterior mass leak taken at the exact tail rate.
pub fn jump_operator_1d(
    values: &[f64],
    h: f64,
    spec: &StableNoiseSpec,
) -> Result<Vec<f64>, FpeError> {
    let kernel = JumpKernel::new(values.len(), h, spec)?;
    let mut rev = vec![0.0; values.len()];
    let mut out = vec![0.0; values.len()];
    kernel.apply_into(values, &mut rev, &mut out);
    Ok(out)
}

/// Face-centered velocities of a planar field over the grid: the x
/// component on vertical faces (ny rows of nx+1 faces) and the y component
/// on horizontal faces (ny+1 rows of nx faces).
fn face_velocities<F>(grid: &DensityGrid, field: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut b1 = vec![0.0; (nx + 1) * ny];
    let mut b2 = vec![0.0; nx * (ny + 1)];
    for j in 0..ny {
        let y = grid.y_center(j);
        for fi in 0..=nx {
            let x = grid.x_min + fi as f64 * hx;
            b1[j * (nx + 1) + fi] = field(x, y).0;
        }
    }
    for fj in 0..=ny {
        let y = grid.y_min + fj as f64 * hy;
        for i in 0..nx {
            let x = grid.x_center(i);
            b2[fj * nx + i] = field(x, y).1;
        }
    }
    (b1, b2)
}

fn divergence_into(
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    b1: &[f64],
    b2: &[f64],
    p: &[f64],
    out: &mut [f64],
) {
    // first-order upwind fluxes; upwinding from outside the domain sees
    // zero density
    let flux_x = |j: usize, fi: usize| -> f64 {
        let v = b1[j * (nx + 1) + fi];
        let up = if v > 0.0 {
            if fi > 0 {
                p[j * nx + fi - 1]
            } else {
                0.0
            }
        } else if fi < nx {
            p[j * nx + fi]
        } else {
            0.0
        };
        v * up
    };
    let flux_y = |fj: usize, i: usize| -> f64 {
        let v = b2[fj * nx + i];
        let up = if v > 0.0 {
            if fj > 0 {
                p[(fj - 1) * nx + i]
            } else {
                0.0
            }
        } else if fj < ny {
            p[fj * nx + i]
        } else {
            0.0
        };
        v * up
    };
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let dx = (flux_x(j, i + 1) - flux_x(j, i)) / hx;
            let dy = (flux_y(j + 1, i) - flux_y(j, i)) / hy;
            *o = -dx - dy;
        }
    });
}

/// Conservative-form drift transport -d/dx(b1 p) - d/dy(b2 p) with
/// first-order upwinding by the sign of the face velocity, for an arbitrary
/// velocity field. Exterior density is zero.
pub fn drift_divergence_with<F>(grid: &DensityGrid, field: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let (b1, b2) = face_velocities(grid, field);
    let mut out = vec![0.0; grid.nx * grid.ny];
    divergence_into(
        grid.nx,
        grid.ny,
        grid.hx(),
        grid.hy(),
        &b1,
        &b2,
        &grid.values,
        &mut out,
    );
    out
}

/// Drift transport under the model vector field.
pub fn drift_divergence(grid: &DensityGrid, params: &ModelParams) -> Vec<f64> {
    drift_divergence_with(grid, |x, y| {
        let v = model::drift(State::new(x, y), params);
        (v.x, v.y)
    })
}

struct Operator {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    dt: f64,
    kx: JumpKernel,
    ky: JumpKernel,
    b1: Vec<f64>,
    b2: Vec<f64>,
}

struct Workspace {
    rhs: Vec<f64>,
    jx: Vec<f64>,
    pt: Vec<f64>,
    jt: Vec<f64>,
    prev: Vec<f64>,
}

impl Workspace {
    fn new(nx: usize, ny: usize) -> Self {
        let n = nx * ny;
        Workspace {
            rhs: vec![0.0; n],
            jx: vec![0.0; n],
            pt: vec![0.0; n],
            jt: vec![0.0; n],
            prev: vec![0.0; n],
        }
    }
}

impl Operator {
    fn build(config: &FpeConfig) -> Result<Self, FpeError> {
        let grid = DensityGrid::uniform(
            config.x_min, config.x_max, config.y_min, config.y_max, config.nx, config.ny,
        );
        let (hx, hy) = (grid.hx(), grid.hy());
        let kx = JumpKernel::new(config.nx, hx, &config.noise_x)?;
        let ky = JumpKernel::new(config.ny, hy, &config.noise_y)?;
        let params = config.params;
        let (b1, b2) = face_velocities(&grid, |x, y| {
            let v = model::drift(State::new(x, y), &params);
            (v.x, v.y)
        });
        let max_b1 = b1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_b2 = b2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = 0.5 / (max_b1 / hx + max_b2 / hy + kx.lambda() + ky.lambda());
        let dt = match config.dt {
            None => bound,
            Some(dt) if dt <= bound => dt,
            Some(dt) => return Err(FpeError::DtTooLarge { dt, bound }),
        };
        Ok(Operator {
            nx: config.nx,
            ny: config.ny,
            hx,
            hy,
            dt,
            kx,
            ky,
            b1,
            b2,
        })
    }

    fn apply_rhs(&self, p: &[f64], ws: &mut Workspace) {
        let (nx, ny) = (self.nx, self.ny);
        ws.jx
            .par_chunks_mut(nx)
            .zip(p.par_chunks(nx))
            .for_each_init(
                || vec![0.0; nx],
                |rev, (out_row, p_row)| self.kx.apply_into(p_row, rev, out_row),
            );
        for j in 0..ny {
            for i in 0..nx {
                ws.pt[i * ny + j] = p[j * nx + i];
            }
        }
        {
            let pt = &ws.pt;
            ws.jt
                .par_chunks_mut(ny)
                .zip(pt.par_chunks(ny))
                .for_each_init(
                    || vec![0.0; ny],
                    |rev, (out_col, p_col)| self.ky.apply_into(p_col, rev, out_col),
                );
        }
        divergence_into(nx, ny, self.hx, self.hy, &self.b1, &self.b2, p, &mut ws.rhs);
        let jx = &ws.jx;
        let jt = &ws.jt;
        ws.rhs.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, o) in row.iter_mut().enumerate() {
                *o += jx[j * nx + i] + jt[i * ny + j];
            }
        });
    }

    /// One explicit update in place. Returns ||p_new - p_old||_1 / dt after
    /// clipping and renormalization.
    fn advance(&self, p: &mut [f64], ws: &mut Workspace, step: usize) -> Result<f64, FpeError> {
        self.apply_rhs(p, ws);
        ws.prev.copy_from_slice(p);
        let dt = self.dt;
        let mut max_abs = 0.0f64;
        for (v, r) in p.iter_mut().zip(&ws.rhs) {
            *v += dt * r;
            max_abs = max_abs.max(v.abs());
        }
        if !(max_abs <= INSTABILITY_GUARD) {
            return Err(FpeError::Unstable { step });
        }
        let mut mass = 0.0;
        for v in p.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
            mass += *v;
        }
        mass *= self.hx * self.hy;
        if !(mass > 0.0) {
            return Err(FpeError::MassVanished { step });
        }
        let inv = 1.0 / mass;
        let mut l1 = 0.0;
        for (v, prev) in p.iter_mut().zip(&ws.prev) {
            *v *= inv;
            l1 += (*v - prev).abs();
        }
        Ok(l1 * self.hx * self.hy / dt)
    }
}

/// The explicit stability bound on the pseudo-time step for a config.
pub fn stable_dt_bound(config: &FpeConfig) -> Result<f64, FpeError> {
    config.validate()?;
    let mut auto = config.clone();
    auto.dt = None;
    Ok(Operator::build(&auto)?.dt)
}

/// One explicit pseudo-time update of a density grid: drift transport plus
/// both jump operators, then negative clipping and mass renormalization.
pub fn step(grid: &DensityGrid, config: &FpeConfig) -> Result<DensityGrid, FpeError> {
    config.validate()?;
    if grid.nx != config.nx || grid.ny != config.ny {
        return Err(FpeError::InvalidConfig(
            "grid shape does not match config".into(),
        ));
    }
    let op = Operator::build(config)?;
    let mut out = grid.clone();
    let mut ws = Workspace::new(config.nx, config.ny);
    op.advance(&mut out.values, &mut ws, 0)?;
    Ok(out)
}

/// Outcome of a stationary solve: the converged (or last) density plus
/// convergence metadata.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryResult {
    #[serde(skip)]
    pub grid: DensityGrid,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Pseudo-time step actually used.
    pub dt: f64,
    /// (iteration, residual) samples, every few hundred steps plus the last.
    pub residual_history: Vec<(u64, f64)>,
}

fn solve_from(config: &FpeConfig, mut grid: DensityGrid) -> Result<StationaryResult, FpeError> {
    let op = Operator::build(config)?;
    let mut ws = Workspace::new(config.nx, config.ny);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=config.max_steps {
        residual = op.advance(&mut grid.values, &mut ws, it)?;
        iterations = it;
        if it % HISTORY_STRIDE == 0 {
            history.push((it as u64, residual));
        }
        if residual < config.tol {
            break;
        }
    }
    if history.last().map(|&(i, _)| i) != Some(iterations as u64) {
        history.push((iterations as u64, residual));
    }
    Ok(StationaryResult {
        grid,
        iterations,
        final_residual: residual,
        converged: residual < config.tol,
        dt: op.dt,
        residual_history: history,
    })
}

/// Iterate [`step`] from the configured initial condition until the
/// residual ||p_{n+1} - p_n||_1 / dt drops below `tol` or `max_steps` is
/// reached. Non-convergence is reported in the result, not as an error.
pub fn solve_stationary(config: &FpeConfig) -> Result<StationaryResult, FpeError> {
    config.validate()?;
    solve_from(config, config.initial_grid())
}

/// Like [`solve_stationary`] but starting from a caller-provided density of
/// matching geometry (e.g. a coarse solution resampled onto a finer grid).
pub fn solve_stationary_from(
    config: &FpeConfig,
    initial: DensityGrid,
) -> Result<StationaryResult, FpeError> {
    config.validate()?;
    let reference = DensityGrid::uniform(
        config.x_min, config.x_max, config.y_min, config.y_max, config.nx, config.ny,
    );
    if !initial.same_geometry(&reference) {
        return Err(FpeError::InvalidConfig(
            "initial grid geometry does not match config".into(),
        ));
    }
    solve_from(config, initial)
}

/// Plain-text export: a `# x_min x_max y_min y_max nx ny` header, then ny
/// rows (y ascending) of nx space-separated densities (x ascending).
pub fn write_density_matrix<W: Write>(grid: &DensityGrid, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "# {} {} {} {} {} {}",
        grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.nx, grid.ny
    )?;
    let mut line = String::new();
    for j in 0..grid.ny {
        line.clear();
        for i in 0..grid.nx {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", grid.values[j * grid.nx + i]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parse the matrix format written by [`write_density_matrix`].
pub fn read_density_matrix<R: BufRead>(input: R) -> Result<DensityGrid, FpeError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| FpeError::Parse("empty input".into()))??;
    let fields: Vec<&str> = header
        .trim_start_matches('#')
        .split_whitespace()
        .collect();
    if fields.len() != 6 {
        return Err(FpeError::Parse(format!(
            "expected 6 header fields, got {}",
            fields.len()
        )));
    }
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| FpeError::Parse(format!("bad float {s:?}: {e}")))
    };
    let parse_u = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| FpeError::Parse(format!("bad integer {s:?}: {e}")))
    };
    let (x_min, x_max) = (parse_f(fields[0])?, parse_f(fields[1])?);
    let (y_min, y_max) = (parse_f(fields[2])?, parse_f(fields[3])?);
    let (nx, ny) = (parse_u(fields[4])?, parse_u(fields[5])?);
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(parse_f(tok)?);
        }
    }
    if values.len() != nx * ny {
        return Err(FpeError::Parse(format!(
            "expected {} values, got {}",
            nx * ny,
            values.len()
        )));
    }
    Ok(DensityGrid {
        x_min,
        x_max,
        y_min,
        y_max,
        nx,
        ny,
        values,
    })
}
