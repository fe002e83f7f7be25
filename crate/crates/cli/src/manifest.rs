//! The run manifest written alongside every command's outputs. It embeds the
//! original configuration (post seed override), so pointing `--config` at a
//! manifest replays the run; with the same seed the outputs are
//! byte-identical.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::path::Path;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedPoint {
    /// Directory of this point's outputs, relative to the output root.
    pub dir: String,
    /// Sweep assignments that produced the point (empty without a sweep).
    pub sweep: Map<String, Value>,
    /// The fully resolved config, all defaults expanded.
    pub config: Value,
    /// Per-point run info (diverged counts, convergence data, ...).
    pub info: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    /// Seed override given on the command line, if any.
    pub seed: Option<u64>,
    /// The configuration as submitted (seed override applied), including any
    /// sweep block. Feed this file back through --config to replay.
    pub config: Value,
    pub points: Vec<ResolvedPoint>,
    /// Output files relative to the output root, manifest excluded.
    pub outputs: Vec<String>,
    /// Column layouts of the CSV formats this tool emits.
    pub csv_schemas: BTreeMap<String, String>,
    pub duration_seconds: f64,
}

pub fn csv_schemas() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("trajectory".into(), "t,X,Y".into()),
        ("bifurcation".into(), "r,mu".into()),
        (
            "stats".into(),
            "t,mean_X,median_X,iqr_X,min_X,max_X,mean_Y,median_Y,iqr_Y,min_Y,max_Y".into(),
        ),
    ])
}

impl RunManifest {
    pub fn write(&self, out_root: &Path) -> std::io::Result<()> {
        let path = out_root.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text)
    }
}
