use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::llm::{AgentRole, BackendConfig};

pub const CONFIG_FILE: &str = "shapecraft.json";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";

/// Contents of `shapecraft.json`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub backends: BTreeMap<AgentRole, BackendConfig>,
    pub m: Option<usize>,
    pub t: Option<usize>,
    pub s_tau: Option<u8>,
    pub n_bootstrap: Option<usize>,
    /// Applied to every role.
    pub temperature: Option<f64>,
    pub img_size: Option<u32>,
    pub sample_points: Option<usize>,
    pub voxel_res: Option<usize>,
    pub seed: Option<u64>,
    pub uniform_fit: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Values after flags, then the config file, then built-in defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub m: usize,
    pub t: usize,
    pub s_tau: u8,
    pub n_bootstrap: usize,
    pub temperature: Option<f64>,
    pub img_size: u32,
    pub sample_points: usize,
    pub voxel_res: usize,
    pub seed: u64,
    pub uniform_fit: bool,
    pub backends: BTreeMap<AgentRole, BackendConfig>,
}

/// Flag values; `None` when the flag was not given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub m: Option<usize>,
    pub t: Option<usize>,
    pub s_tau: Option<u8>,
    pub n_bootstrap: Option<usize>,
    pub temperature: Option<f64>,
    pub img_size: Option<u32>,
    pub sample_points: Option<usize>,
    pub voxel_res: Option<usize>,
    pub seed: Option<u64>,
    pub uniform_fit: bool,
}

impl Settings {
    pub fn resolve(file: FileConfig, flags: &Overrides) -> Self {
        let temperature = flags.temperature.or(file.temperature);
        let mut backends = file.backends;
        for role in AgentRole::ALL {
            backends
                .entry(role)
                .or_insert_with(|| BackendConfig::new(DEFAULT_ENDPOINT, DEFAULT_MODEL));
        }
        if let Some(t) = temperature {
            for cfg in backends.values_mut() {
                cfg.temperature = t;
            }
        }
        Self {
            m: flags.m.or(file.m).unwrap_or(3),
            t: flags.t.or(file.t).unwrap_or(3),
            s_tau: flags.s_tau.or(file.s_tau).unwrap_or(9),
            n_bootstrap: flags.n_bootstrap.or(file.n_bootstrap).unwrap_or(2),
            temperature,
            img_size: flags.img_size.or(file.img_size).unwrap_or(crate::render::DEFAULT_SIZE),
            sample_points: flags
                .sample_points
                .or(file.sample_points)
                .unwrap_or(crate::metrics::DEFAULT_SAMPLE_POINTS),
            voxel_res: flags.voxel_res.or(file.voxel_res).unwrap_or(crate::metrics::DEFAULT_VOXEL_RES),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            uniform_fit: flags.uniform_fit || file.uniform_fit.unwrap_or(false),
            backends,
        }
    }
}
