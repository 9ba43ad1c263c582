//! The single JSON configuration document shared by every subcommand.

use std::path::{Path, PathBuf};

use motif::affordance::DenoiseConfig;
use motif::features::StdDivisor;
use motif::lda::{LdaConfig, DEFAULT_RIDGE_SCALE};
use motif::projection::DEFAULT_DEPTH_TOLERANCE;
use motif::synth::{CylinderScene, DEFAULT_TRIAL_JITTER, TRIALS_PER_MASS};
use motif::FrameStreamConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "MOTIF_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub denoise: DenoiseConfig,
    pub stream: FrameStreamConfig,
    pub projection: ProjectionSettings,
    pub grasp: GraspSettings,
    pub lda: LdaSettings,
    pub synth: SynthSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionSettings {
    /// Meters.
    pub depth_tolerance: f64,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self { depth_tolerance: DEFAULT_DEPTH_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspSettings {
    /// Score at or above which a point counts as hot.
    pub hot_threshold: f64,
    /// Meters.
    pub safety_radius: f64,
}

impl Default for GraspSettings {
    fn default() -> Self {
        Self { hot_threshold: 40.0, safety_radius: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSettings {
    pub ridge_scale: f64,
    pub std_divisor: StdDivisor,
}

impl Default for LdaSettings {
    fn default() -> Self {
        Self { ridge_scale: DEFAULT_RIDGE_SCALE, std_divisor: StdDivisor::Population }
    }
}

impl LdaSettings {
    pub fn lda(&self) -> LdaConfig {
        LdaConfig { ridge_scale: self.ridge_scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSettings {
    pub cylinder: CylinderScene,
    pub trials_per_mass: usize,
    pub trial_jitter: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self { cylinder: CylinderScene::default(), trials_per_mass: TRIALS_PER_MASS, trial_jitter: DEFAULT_TRIAL_JITTER }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), reason: e.to_string() })?;
        cfg.denoise
            .validate()
            .map_err(|e| CliError::Config { path: path.to_path_buf(), reason: e.to_string() })?;
        Ok(cfg)
    }

    /// `--config` first, then `$MOTIF_CONFIG`, else defaults.
    pub fn load(flag: Option<&Path>) -> Result<Self, CliError> {
        let path: Option<PathBuf> =
            flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|source| CliError::Io { path: p.clone(), source })?;
                Self::from_json(&text, &p)
            }
        }
    }
}
