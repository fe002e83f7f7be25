//! Trajectory integration: deterministic phase portraits and time series via
//! a fixed-step 4th-order scheme, the jump-SDE Euler scheme with exact-in-law
//! alpha-stable increments, and reproducible Monte Carlo ensembles.
//!
//! Every trajectory owns an RNG stream derived from (seed, stream id), so a
//! path is bit-identical whether it runs alone, in a batch, serially or in
//! parallel. Heavy-tailed jumps make occasional blow-ups statistically
//! inevitable; a guarded trajectory is flagged and truncated, never a panic.

use crate::model::{self, ModelParams, State};
use crate::stable::{sample_standard_stable, RngStream, StableNoiseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// States beyond this magnitude in either component flag the trajectory as
/// diverged and stop the integration.
pub const DIVERGENCE_GUARD: f64 = 1e9;

/// Default time step: resolves the fastest linearized timescale of the
/// studied parameter ranges with a wide margin.
pub const DEFAULT_DT: f64 = 0.01;

/// Default recording stride (in steps).
pub const DEFAULT_RECORD_STRIDE: usize = 10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("model error: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("noise error: {0}")]
    Noise(#[from] crate::stable::StableError),
    #[error("the deterministic integrator requires both noise intensities to be zero")]
    NonzeroNoise,
}

/// A recorded path: time stamps and matching states. When the divergence
/// guard fires the path is cut short and `diverged` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<State> {
        self.states.last().copied()
    }
}

/// Everything one stochastic run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub noise_x: StableNoiseSpec,
    pub noise_y: StableNoiseSpec,
    pub dt: f64,
    pub t_end: f64,
    pub initial: State,
    pub seed: u64,
    /// Project each component to max(., 0) after every update. Off by
    /// default: the faithful dynamics admit negative excursions.
    pub clamp_nonnegative: bool,
    pub record_stride: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.noise_x.validate()?;
        self.noise_y.validate()?;
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(SimError::InvalidConfig(format!(
                "t_end must be >= dt, got t_end={} dt={}",
                self.t_end, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidConfig("record_stride must be >= 1".into()));
        }
        if !self.initial.is_finite() {
            return Err(SimError::InvalidConfig("initial state must be finite".into()));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            params: ModelParams::default(),
            noise_x: StableNoiseSpec::off(),
            noise_y: StableNoiseSpec::off(),
            dt: DEFAULT_DT,
            t_end: 100.0,
            initial: State::new(20.0, 10.0),
            seed: 0,
            clamp_nonnegative: false,
            record_stride: DEFAULT_RECORD_STRIDE,
        }
    }
}

/// A batch of trajectories sharing one base config; trajectory `i` was
/// produced by the stream (config.seed, i).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub config: SimConfig,
    pub trajectories: Vec<Trajectory>,
}

impl Ensemble {
    pub fn n_traj(&self) -> usize {
        self.trajectories.len()
    }
}

fn n_steps(dt: f64, t_end: f64) -> usize {
    ((t_end / dt).round() as usize).max(1)
}

fn guard(s: State) -> bool {
    !s.is_finite() || s.x.abs() > DIVERGENCE_GUARD || s.y.abs() > DIVERGENCE_GUARD
}

/// Classical 4th-order fixed-step integration of an arbitrary planar field.
///
/// Records the initial state, every `record_stride`-th step and the final
/// step. Aborts (flagging the trajectory) when the guard trips.
pub fn integrate_ode_with<F>(
    field: F,
    initial: State,
    dt: f64,
    t_end: f64,
    record_stride: usize,
) -> Trajectory
where
    F: Fn(State) -> State,
{
    let steps = n_steps(dt, t_end);
    let mut times = Vec::with_capacity(steps / record_stride + 2);
    let mut states = Vec::with_capacity(steps / record_stride + 2);
    let mut s = initial;
    let mut diverged = guard(s);
    if !diverged {
        times.push(0.0);
        states.push(s);
        for step in 1..=steps {
            let k1 = field(s);
            let k2 = field(State::new(s.x + 0.5 * dt * k1.x, s.y + 0.5 * dt * k1.y));
            let k3 = field(State::new(s.x + 0.5 * dt * k2.x, s.y + 0.5 * dt * k2.y));
            let k4 = field(State::new(s.x + dt * k3.x, s.y + dt * k3.y));
            s = State::new(
                s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
            );
            if guard(s) {
                diverged = true;
                break;
            }
            if step % record_stride == 0 || step == steps {
                times.push(step as f64 * dt);
                states.push(s);
            }
        }
    }
    Trajectory {
        times,
        states,
        diverged,
    }
}

/// Deterministic integration of the model field. Requires both noise
/// channels switched off.
pub fn integrate_ode(config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    if config.noise_x.sigma != 0.0 || config.noise_y.sigma != 0.0 {
        return Err(SimError::NonzeroNoise);
    }
    let params = config.params;
    Ok(integrate_ode_with(
        move |s| model::drift(s, &params),
        config.initial,
        config.dt,
        config.t_end,
        config.record_stride,
    ))
}

/// Euler step scheme for the jump SDE over an arbitrary drift field:
/// each component moves by drift * dt plus an alpha-stable increment drawn
/// from the trajectory's own stream (x channel first, then y).
pub fn euler_maruyama_with<F>(field: F, config: &SimConfig, stream_id: u64) -> Trajectory
where
    F: Fn(State) -> State,
{
    let steps = n_steps(config.dt, config.t_end);
    let mut rng = RngStream::new(config.seed, stream_id);
    let mut times = Vec::with_capacity(steps / config.record_stride + 2);
    let mut states = Vec::with_capacity(steps / config.record_stride + 2);
    // hoisted increment scales; same arithmetic as sample_increment
    let scale_x = config.noise_x.sigma * config.dt.powf(1.0 / config.noise_x.alpha);
    let scale_y = config.noise_y.sigma * config.dt.powf(1.0 / config.noise_y.alpha);
    let mut s = config.initial;
    let mut diverged = guard(s);
    if !diverged {
        times.push(0.0);
        states.push(s);
        for step in 1..=steps {
            let v = field(s);
            let jx = if config.noise_x.sigma == 0.0 {
                0.0
            } else {
                scale_x * sample_standard_stable(config.noise_x.alpha, &mut rng)
            };
            let jy = if config.noise_y.sigma == 0.0 {
                0.0
            } else {
                scale_y * sample_standard_stable(config.noise_y.alpha, &mut rng)
            };
            let mut next = State::new(s.x + v.x * config.dt + jx, s.y + v.y * config.dt + jy);
            if config.clamp_nonnegative {
                next = State::new(next.x.max(0.0), next.y.max(0.0));
            }
            s = next;
            if guard(s) {
                diverged = true;
                break;
            }
            if step % config.record_stride == 0 || step == steps {
                times.push(step as f64 * config.dt);
                states.push(s);
            }
        }
    }
    Trajectory {
        times,
        states,
        diverged,
    }
}

/// One stochastic trajectory on an explicit stream id.
pub fn integrate_sde_stream(config: &SimConfig, stream_id: u64) -> Result<Trajectory, SimError> {
    config.validate()?;
    let params = config.params;
    Ok(euler_maruyama_with(
        move |s| model::drift(s, &params),
        config,
        stream_id,
    ))
}

/// One stochastic trajectory on stream 0.
pub fn integrate_sde(config: &SimConfig) -> Result<Trajectory, SimError> {
    integrate_sde_stream(config, 0)
}

/// `n_traj` independent trajectories on streams 0..n_traj, executed in
/// parallel; results are identical to serial execution. Diverged paths come
/// back flagged, never as a batch failure.
pub fn run_ensemble(config: &SimConfig, n_traj: usize) -> Result<Ensemble, SimError> {
    config.validate()?;
    if n_traj == 0 {
        return Err(SimError::InvalidConfig("n_traj must be >= 1".into()));
    }
    let params = config.params;
    let trajectories: Vec<Trajectory> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| euler_maruyama_with(move |s| model::drift(s, &params), config, i))
        .collect();
    Ok(Ensemble {
        config: config.clone(),
        trajectories,
    })
}

/// Deterministic trajectories from a set of initial conditions, for
/// phase-plane plotting.
pub fn phase_portrait(
    params: &ModelParams,
    initials: &[State],
    t_end: f64,
) -> Result<Vec<Trajectory>, SimError> {
    if initials.is_empty() {
        return Err(SimError::InvalidConfig("initials must be non-empty".into()));
    }
    params.validate()?;
    let p = *params;
    Ok(initials
        .iter()
        .map(|&s0| {
            integrate_ode_with(
                move |s| model::drift(s, &p),
                s0,
                DEFAULT_DT,
                t_end,
                DEFAULT_RECORD_STRIDE,
            )
        })
        .collect())
}

/// Per-time summary of one coordinate across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub median: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

/// Time-resolved ensemble summary over the unflagged trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub x: Vec<ChannelStats>,
    pub y: Vec<ChannelStats>,
    pub n_trajectories: usize,
    pub n_flagged: usize,
}

/// Linear-interpolation quantile of an already sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn channel_stats(values: &mut Vec<f64>) -> ChannelStats {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    ChannelStats {
        mean: values.iter().sum::<f64>() / n as f64,
        median: quantile_sorted(values, 0.5),
        iqr: quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25),
        min: values[0],
        max: values[n - 1],
    }
}

/// Summary statistics per recorded time over the unflagged trajectories
/// plus the count of diverged paths. Reduction order is fixed, so the
/// result does not depend on how the ensemble was executed.
pub fn ensemble_stats(ensemble: &Ensemble) -> EnsembleStats {
    let alive: Vec<&Trajectory> = ensemble
        .trajectories
        .iter()
        .filter(|t| !t.diverged)
        .collect();
    let n_flagged = ensemble.trajectories.len() - alive.len();
    let times = alive.first().map(|t| t.times.clone()).unwrap_or_default();
    let mut xs = Vec::with_capacity(alive.len());
    let mut ys = Vec::with_capacity(alive.len());
    let mut x_stats = Vec::with_capacity(times.len());
    let mut y_stats = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        xs.clear();
        ys.clear();
        for t in &alive {
            xs.push(t.states[k].x);
            ys.push(t.states[k].y);
        }
        x_stats.push(channel_stats(&mut xs));
        y_stats.push(channel_stats(&mut ys));
    }
    EnsembleStats {
        times,
        x: x_stats,
        y: y_stats,
        n_trajectories: ensemble.trajectories.len(),
        n_flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_noise(r: f64, mu: f64) -> SimConfig {
        SimConfig {
            params: ModelParams::with_rates(r, mu),
            ..SimConfig::default()
        }
    }

    #[test]
    fn origin_is_stationary() {
        let config = SimConfig {
            initial: State::new(0.0, 0.0),
            t_end: 10.0,
            ..zero_noise(1.5, 0.22)
        };
        let traj = integrate_ode(&config).unwrap();
        assert!(!traj.diverged);
        for s in &traj.states {
            assert_eq!((s.x, s.y), (0.0, 0.0));
        }
    }

    #[test]
    fn ode_reaches_reported_attractors() {
        let config = SimConfig {
            t_end: 500.0,
            ..zero_noise(1.5, 0.22)
        };
        let end = integrate_ode(&config).unwrap().final_state().unwrap();
        let z3 = model::coexistence_point(&config.params).unwrap();
        assert_abs_diff_eq!(end.x, z3.x, epsilon = 1e-2);
        assert_abs_diff_eq!(end.y, z3.y, epsilon = 1e-2);
        assert_abs_diff_eq!(end.x, 11.0554, epsilon = 1e-2);
        assert_abs_diff_eq!(end.y, 25.7070, epsilon = 1e-2);

        let config = SimConfig {
            initial: State::new(5.0, 5.0),
            t_end: 1000.0,
            ..zero_noise(0.2, 0.25)
        };
        let end = integrate_ode(&config).unwrap().final_state().unwrap();
        assert_abs_diff_eq!(end.x, 10.0, epsilon = 1e-2);
        assert_abs_diff_eq!(end.y, 0.0, epsilon = 1e-2);
    }

    #[test]
    fn ode_rejects_noise() {
        let config = SimConfig {
            noise_x: StableNoiseSpec::new(1.5, 0.1),
            ..zero_noise(1.5, 0.22)
        };
        assert!(matches!(integrate_ode(&config), Err(SimError::NonzeroNoise)));
    }

    #[test]
    fn step_halving_shows_fourth_order() {
        // error against a much finer reference run over a smooth interval
        let params = ModelParams::with_rates(1.5, 0.22);
        let run = |dt: f64| {
            integrate_ode_with(
                |s| model::drift(s, &params),
                State::new(20.0, 10.0),
                dt,
                5.0,
                usize::MAX,
            )
            .final_state()
            .unwrap()
        };
        let reference = run(0.1 / 64.0);
        let err = |dt: f64| {
            let e = run(dt);
            e.distance(reference)
        };
        let ratio = err(0.1) / err(0.05);
        assert!(
            (10.0..=22.0).contains(&ratio),
            "step-halving ratio {ratio} not ~16"
        );
    }

    #[test]
    fn sde_without_noise_is_explicit_euler() {
        let config = SimConfig {
            t_end: 50.0,
            ..zero_noise(1.5, 0.22)
        };
        let sde = integrate_sde(&config).unwrap().final_state().unwrap();
        let ode = integrate_ode(&config).unwrap().final_state().unwrap();
        // Euler is first order: agreement within O(dt)
        assert!(sde.distance(ode) < 10.0 * config.dt, "distance {}", sde.distance(ode));
    }

    #[test]
    fn ensemble_is_reproducible_and_stream_indexed() {
        let config = SimConfig {
            noise_x: StableNoiseSpec::new(1.5, 0.1),
            noise_y: StableNoiseSpec::new(1.5, 0.1),
            t_end: 5.0,
            seed: 9,
            ..zero_noise(1.5, 0.22)
        };
        let a = run_ensemble(&config, 4).unwrap();
        let b = run_ensemble(&config, 4).unwrap();
        for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
            assert_eq!(ta, tb);
        }
        // singleton batch equals the stream-0 path
        let single = run_ensemble(&config, 1).unwrap();
        assert_eq!(single.trajectories[0], integrate_sde(&config).unwrap());
        // trajectory i is the stream-i path no matter the batch size
        for (i, t) in a.trajectories.iter().enumerate() {
            assert_eq!(*t, integrate_sde_stream(&config, i as u64).unwrap());
        }
    }

    #[test]
    fn clamped_runs_stay_nonnegative() {
        let config = SimConfig {
            noise_x: StableNoiseSpec::new(1.2, 0.5),
            noise_y: StableNoiseSpec::new(1.2, 0.5),
            initial: State::new(0.5, 0.5),
            t_end: 20.0,
            clamp_nonnegative: true,
            seed: 4,
            ..zero_noise(1.5, 0.22)
        };
        let ens = run_ensemble(&config, 8).unwrap();
        for t in &ens.trajectories {
            assert!(!t.diverged);
            for s in &t.states {
                assert!(s.x >= 0.0 && s.y >= 0.0);
            }
        }
    }

    #[test]
    fn divergence_is_flagged_not_fatal() {
        // an initial state beyond any basin: the quadratic competition term
        // drives x to -infinity within a few steps
        let config = SimConfig {
            initial: State::new(-1e6, 0.0),
            t_end: 10.0,
            ..zero_noise(1.5, 0.22)
        };
        let ens = run_ensemble(&config, 3).unwrap();
        for t in &ens.trajectories {
            assert!(t.diverged);
        }
        let stats = ensemble_stats(&ens);
        assert_eq!(stats.n_flagged, 3);
        assert!(stats.times.is_empty());
    }

    #[test]
    fn zero_drift_hook_gives_pure_levy_walk() {
        let config = SimConfig {
            noise_x: StableNoiseSpec::new(2.0, 1.0),
            noise_y: StableNoiseSpec::off(),
            dt: 1.0,
            t_end: 100_000.0,
            record_stride: 1,
            seed: 21,
            ..zero_noise(1.5, 0.22)
        };
        let traj = euler_maruyama_with(|_| State::new(0.0, 0.0), &config, 0);
        assert!(!traj.diverged);
        // x increments are N(0, 2 dt); check mean and variance
        let incs: Vec<f64> = traj.states.windows(2).map(|w| w[1].x - w[0].x).collect();
        let n = incs.len() as f64;
        let mean = incs.iter().sum::<f64>() / n;
        let var = incs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
        assert_abs_diff_eq!(var, 2.0, epsilon = 0.05);
        // y never moves
        for s in &traj.states {
            assert_eq!(s.y, 10.0);
        }
    }

    #[test]
    fn stats_of_identical_paths_have_zero_spread() {
        let config = SimConfig {
            t_end: 10.0,
            ..zero_noise(1.5, 0.22)
        };
        let ens = run_ensemble(&config, 5).unwrap();
        let stats = ensemble_stats(&ens);
        assert_eq!(stats.n_flagged, 0);
        for (sx, sy) in stats.x.iter().zip(&stats.y) {
            assert_eq!(sx.iqr, 0.0);
            assert_eq!(sy.iqr, 0.0);
            assert_eq!(sx.min, sx.max);
            assert_eq!(sy.min, sy.max);
        }
    }

    #[test]
    fn paths_visit_prey_only_state_before_spiraling_in() {
        // predator-only noise, prey noise free: trajectories started near the
        // origin ride the prey axis out to the prey-only state (75, 0) and
        // only then climb toward coexistence. Clamped: during the transit the
        // predator count hovers at zero and unclamped noise would push half
        // the paths onto the diverging y < 0 branch.
        let config = SimConfig {
            noise_x: StableNoiseSpec::off(),
            noise_y: StableNoiseSpec::new(1.8, 0.05),
            initial: State::new(2.0, 0.1),
            t_end: 300.0,
            seed: 17,
            clamp_nonnegative: true,
            ..zero_noise(1.5, 0.22)
        };
        let z2 = State::new(75.0, 0.0);
        let ens = run_ensemble(&config, 10).unwrap();
        for t in &ens.trajectories {
            assert!(!t.diverged);
            let min_dist = t
                .states
                .iter()
                .map(|s| s.distance(z2))
                .fold(f64::INFINITY, f64::min);
            assert!(min_dist < 5.0, "path never approached Z2: {min_dist}");
        }
    }

    #[test]
    fn config_validation() {
        let mut config = SimConfig::default();
        assert!(config.validate().is_ok());
        config.dt = 0.0;
        assert!(config.validate().is_err());
        config.dt = 0.5;
        config.t_end = 0.1;
        assert!(config.validate().is_err());
        config.t_end = 10.0;
        config.record_stride = 0;
        assert!(config.validate().is_err());
    }
}
