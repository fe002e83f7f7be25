//! JSON configuration handling: flat per-subcommand documents with the
//! standard model constants defaulted, an optional `sweep` block mapping
//! scalar fields to value lists (expanded as a Cartesian product), and
//! replay of a previous run's manifest.

use anyhow::Context;
use levy_rosmac::fpe::{FpeConfig, FpeInitial};
use levy_rosmac::integrate::SimConfig;
use levy_rosmac::model::{ModelParams, State};
use levy_rosmac::stable::StableNoiseSpec;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::Path;

use crate::CliError;

fn d_c() -> f64 {
    0.02
}
fn d_e() -> f64 {
    0.4
}
fn d_cmax() -> f64 {
    1.0
}
fn d_k() -> f64 {
    10.0
}

/// The model constants as they appear in every config document; only the
/// two swept rates are required.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub r: f64,
    pub mu: f64,
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_e", rename = "E")]
    pub e: f64,
    #[serde(default = "d_cmax", rename = "C")]
    pub cmax: f64,
    #[serde(default = "d_k")]
    pub k: f64,
}

impl ParamsConfig {
    pub fn to_params(&self) -> ModelParams {
        ModelParams {
            r: self.r,
            mu: self.mu,
            c: self.c,
            e: self.e,
            cmax: self.cmax,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriaConfig {
    #[serde(flatten)]
    pub params: ParamsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_e", rename = "E")]
    pub e: f64,
    #[serde(default = "d_cmax", rename = "C")]
    pub cmax: f64,
    #[serde(default = "d_k")]
    pub k: f64,
}

fn d_portrait_t_end() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortraitConfig {
    #[serde(flatten)]
    pub params: ParamsConfig,
    pub initials: Vec<[f64; 2]>,
    #[serde(default = "d_portrait_t_end")]
    pub t_end: f64,
}

fn d_alpha() -> f64 {
    1.5
}
fn d_dt() -> f64 {
    0.01
}
fn d_sim_t_end() -> f64 {
    300.0
}
fn d_x0() -> f64 {
    20.0
}
fn d_y0() -> f64 {
    10.0
}
fn d_stride() -> usize {
    10
}
fn d_n_traj() -> usize {
    100
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub params: ParamsConfig,
    #[serde(default = "d_alpha")]
    pub alpha1: f64,
    #[serde(default)]
    pub sigma1: f64,
    #[serde(default = "d_alpha")]
    pub alpha2: f64,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_sim_t_end")]
    pub t_end: f64,
    #[serde(default = "d_x0")]
    pub x0: f64,
    #[serde(default = "d_y0")]
    pub y0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clamp_nonnegative: bool,
    #[serde(default = "d_stride")]
    pub record_stride: usize,
    #[serde(default = "d_n_traj")]
    pub n_traj: usize,
    /// Write one CSV per trajectory in addition to the ensemble stats.
    #[serde(default = "d_true")]
    pub write_trajectories: bool,
}

impl SimulateConfig {
    pub fn to_sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params.to_params(),
            noise_x: StableNoiseSpec::new(self.alpha1, self.sigma1),
            noise_y: StableNoiseSpec::new(self.alpha2, self.sigma2),
            dt: self.dt,
            t_end: self.t_end,
            initial: State::new(self.x0, self.y0),
            seed: self.seed,
            clamp_nonnegative: self.clamp_nonnegative,
            record_stride: self.record_stride,
        }
    }
}

fn d_sigma_fp() -> f64 {
    0.1
}
fn d_x_max() -> f64 {
    30.0
}
fn d_y_max() -> f64 {
    60.0
}
fn d_grid_n() -> usize {
    150
}
fn d_tol() -> f64 {
    1e-6
}
fn d_max_steps() -> usize {
    400_000
}
fn d_initial() -> FpeInitial {
    FpeInitial::GaussianBumpAtAttractor
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityConfig {
    #[serde(flatten)]
    pub params: ParamsConfig,
    #[serde(default = "d_alpha")]
    pub alpha1: f64,
    #[serde(default = "d_sigma_fp")]
    pub sigma1: f64,
    #[serde(default = "d_alpha")]
    pub alpha2: f64,
    #[serde(default = "d_sigma_fp")]
    pub sigma2: f64,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "d_x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub y_min: f64,
    #[serde(default = "d_y_max")]
    pub y_max: f64,
    #[serde(default = "d_grid_n")]
    pub nx: usize,
    #[serde(default = "d_grid_n")]
    pub ny: usize,
    /// Pseudo-time step; omitted means the stability bound is used.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    #[serde(default = "d_initial")]
    pub initial: FpeInitial,
}

impl DensityConfig {
    pub fn to_fpe_config(&self) -> FpeConfig {
        FpeConfig {
            params: self.params.to_params(),
            noise_x: StableNoiseSpec::new(self.alpha1, self.sigma1),
            noise_y: StableNoiseSpec::new(self.alpha2, self.sigma2),
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
            nx: self.nx,
            ny: self.ny,
            dt: self.dt,
            tol: self.tol,
            max_steps: self.max_steps,
            initial: self.initial,
        }
    }
}

/// One expanded sweep point: the concrete config document plus the sweep
/// assignments that produced it (empty when there is no sweep block).
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub config: Value,
    pub assignment: Map<String, Value>,
}

pub fn load_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| CliError::Config(format!("{e:#}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A manifest written by a previous run carries the original config under
/// this key; pointing --config at it replays the run.
pub fn unwrap_manifest(doc: Value) -> Value {
    match &doc {
        Value::Object(map) if map.contains_key("subcommand") && map.contains_key("config") => {
            map.get("config").cloned().unwrap()
        }
        _ => doc,
    }
}

/// Expand the optional `sweep` block: every listed field takes each of its
/// values in turn, all combinations in deterministic (sorted-key) order.
pub fn expand_sweep(doc: &Value) -> Result<Vec<SweepPoint>, CliError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    let mut base = obj.clone();
    let sweep = base.remove("sweep");
    let Some(sweep) = sweep else {
        return Ok(vec![SweepPoint {
            config: Value::Object(base),
            assignment: Map::new(),
        }]);
    };
    let sweep = sweep
        .as_object()
        .ok_or_else(|| CliError::Config("sweep must be an object of field: [values]".into()))?;
    let mut keys: Vec<&String> = sweep.keys().collect();
    keys.sort();
    let mut lists = Vec::new();
    for key in &keys {
        let arr = sweep[*key].as_array().ok_or_else(|| {
            CliError::Config(format!("sweep field {key} must be an array of values"))
        })?;
        if arr.is_empty() {
            return Err(CliError::Config(format!("sweep field {key} is empty")));
        }
        lists.push(arr);
    }
    let mut points = vec![SweepPoint {
        config: Value::Object(base),
        assignment: Map::new(),
    }];
    for (key, values) in keys.iter().zip(lists) {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for point in &points {
            for v in values {
                let mut config = point.config.clone();
                config
                    .as_object_mut()
                    .unwrap()
                    .insert((*key).clone(), v.clone());
                let mut assignment = point.assignment.clone();
                assignment.insert((*key).clone(), v.clone());
                next.push(SweepPoint { config, assignment });
            }
        }
        points = next;
    }
    Ok(points)
}

/// Typed view of one expanded point.
pub fn parse_point<T: serde::de::DeserializeOwned>(point: &SweepPoint) -> Result<T, CliError> {
    serde_json::from_value(point.config.clone())
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))
}
