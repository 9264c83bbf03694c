use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::audit::AuditPolicy;
use crate::inference::{RetryPolicy, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    /// Temperature for hinted regeneration; defaults to `temperature`.
    pub hint_temperature: Option<f64>,
    pub max_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            model: "default".into(),
            temperature: DEFAULT_TEMPERATURE,
            hint_temperature: None,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarmupConfig {
    /// Expected share of Refuted examples in the annotated set.
    pub expected_refuted_fraction: f64,
    /// Allowed absolute deviation before a warning is emitted.
    pub tolerance: f64,
}

impl Default for WarmupConfig {
    fn default() -> Self {
        Self {
            expected_refuted_fraction: 0.8,
            tolerance: 0.1,
        }
    }
}

/// Run configuration, read from TOML. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub annotated: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub checkpoint_dir: Option<PathBuf>,
    pub rounds: u32,
    pub use_hints: bool,
    pub use_format_check: bool,
    pub concurrency: usize,
    /// Train on a stratified sample of this many corpus records.
    pub sample_size: Option<usize>,
    pub sample_seed: u64,
    /// Generation endpoint per round: round 1 is the warm-up model, later
    /// rounds the model fine-tuned on the previous round's training file.
    pub endpoints: Vec<String>,
    /// Seconds to wait for a later round's HTTP endpoint to come up.
    pub endpoint_ready_timeout_secs: u64,
    pub templates: Option<PathBuf>,
    pub audit: AuditPolicy,
    pub generation: GenerationConfig,
    pub retry: RetryPolicy,
    pub warmup: WarmupConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            annotated: None,
            out_dir: PathBuf::from("out"),
            checkpoint_dir: None,
            rounds: 1,
            use_hints: true,
            use_format_check: true,
            concurrency: 4,
            sample_size: None,
            sample_seed: 0,
            endpoints: Vec::new(),
            endpoint_ready_timeout_secs: 0,
            templates: None,
            audit: AuditPolicy::default(),
            generation: GenerationConfig::default(),
            retry: RetryPolicy::default(),
            warmup: WarmupConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.rounds < 1 {
            return Err(PipelineError::Config("rounds must be at least 1".into()));
        }
        if self.concurrency < 1 {
            return Err(PipelineError::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hint_temperature(&self) -> f64 {
        self.generation.hint_temperature.unwrap_or(self.generation.temperature)
    }
}
