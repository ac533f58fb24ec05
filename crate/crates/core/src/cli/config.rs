//! Run configuration files.
//!
//! TOML by default; a `.json` extension selects JSON. Top-level tables:
//! `model` (required), `sim`, `lyapunov`, `montecarlo`, `phase`, `output`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lyapunov::{GridSpec, DEFAULT_GRID_SEED};
use crate::model::{ModelSpec, ValidationError};
use crate::montecarlo::Axis;
use crate::simulate::SimConfig;

/// Environment variable that overrides `sim.seed`.
pub const SEED_ENV: &str = "CBLE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub lyapunov: LyapunovBlock,
    #[serde(default)]
    pub montecarlo: MonteCarloBlock,
    #[serde(default)]
    pub phase: Option<PhaseBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovBlock {
    pub deltas: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
    pub points_per_decade: usize,
    pub jitter: f64,
    pub grid_seed: u64,
    pub d0: f64,
    pub n: u32,
    pub k: f64,
}

impl Default for LyapunovBlock {
    fn default() -> Self {
        Self {
            deltas: vec![0.05, 0.1, 0.2],
            y_min: 1.0,
            y_max: 1e6,
            points_per_decade: 64,
            jitter: 0.01,
            grid_seed: DEFAULT_GRID_SEED,
            d0: 1.0,
            n: 9,
            k: 10.0,
        }
    }
}

impl LyapunovBlock {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            y_min: self.y_min,
            y_max: self.y_max,
            points_per_decade: self.points_per_decade,
            jitter: self.jitter,
            seed: self.grid_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub paths: usize,
}

impl Default for MonteCarloBlock {
    fn default() -> Self {
        Self { paths: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBlock {
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default = "default_cell_paths")]
    pub n_per_cell: usize,
}

fn default_cell_paths() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("cble-out"),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(ValidationError),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(s) | ConfigError::Parse(s) => f.write_str(s),
            ConfigError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self, ConfigError> {
        let cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Parse(format!("config: {e}")))?
        };
        cfg.model.validate().map_err(ConfigError::Invalid)?;
        if let Some(sim) = &cfg.sim {
            sim.validate().map_err(ConfigError::Invalid)?;
        }
        Ok(cfg)
    }

    /// Reads a config file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = Self::parse(&text, json)?;
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed = raw
                .trim()
                .parse::<u64>()
                .map_err(|_| ConfigError::Invalid(ValidationError::new(SEED_ENV, format!("not a 64-bit seed: {raw}"))))?;
            if let Some(sim) = &mut cfg.sim {
                sim.seed = seed;
            }
        }
        Ok(cfg)
    }

    pub fn sim(&self) -> Result<&SimConfig, ConfigError> {
        self.sim
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid(ValidationError::new("sim", "this command needs a [sim] table")))
    }
}
