//! Run configuration: a flat TOML file, overridden key by key from the
//! command line.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::BackendConfig;
use crate::pipeline::AttemptPolicy;
use crate::segmenter::Granularity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifierKind {
    Real,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub escalated_temperature: f64,
    pub max_tokens: u32,
    pub timeout_s: u64,
    /// Replay source, or the record target when `record` is set. Manifest
    /// entries may name their own.
    pub transcript_path: Option<PathBuf>,
    /// Mock reply script used when a manifest entry names none.
    pub script_path: Option<PathBuf>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub record: bool,

    pub verifier: VerifierKind,
    pub verifier_cmd: String,
    pub stub_script: Option<PathBuf>,
    pub verify_timeout_s: u64,

    pub max_repairs: usize,
    pub max_format_retries: usize,
    pub propagate_eagerly: bool,
    pub non_interactive: bool,
    pub editor_cmd: Option<String>,
    pub human_script: Option<PathBuf>,
    pub granularity: Granularity,
    pub fewshot_dir: Option<PathBuf>,
    pub max_prompt_chars: Option<usize>,

    pub jobs: usize,
    /// Fixed timestamps and zero wall times, for reproducible reports.
    pub deterministic_clock: bool,
}

impl Default for Config {
    fn default() -> Self {
        let b = BackendConfig::default();
        let p = AttemptPolicy::default();
        Config {
            backend: BackendKind::Live,
            endpoint: b.endpoint_url,
            model: b.model_id,
            temperature: b.temperature,
            escalated_temperature: p.escalated_temperature,
            max_tokens: b.max_tokens,
            timeout_s: b.timeout_seconds,
            transcript_path: None,
            script_path: None,
            api_key_env: b.api_key_source,
            record: false,
            verifier: VerifierKind::Real,
            verifier_cmd: "verus".to_string(),
            stub_script: None,
            verify_timeout_s: 60,
            max_repairs: p.max_repair_attempts,
            max_format_retries: p.max_format_retries,
            propagate_eagerly: false,
            non_interactive: false,
            editor_cmd: None,
            human_script: None,
            granularity: Granularity::Fine,
            fewshot_dir: None,
            max_prompt_chars: None,
            jobs: 1,
            deterministic_clock: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    /// Defaults, then `file`, then `overrides`; later layers win per key.
    pub fn resolve(file: Option<&Path>, overrides: &toml::Table) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(Config::default()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(path) = file {
            let read_err = |message: String| ConfigError::Read { path: path.to_path_buf(), message };
            let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
            let layer: toml::Table = toml::from_str(&text).map_err(|e| read_err(e.to_string()))?;
            table.extend(layer);
        }
        table.extend(overrides.clone());
        let cfg: Config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.backend_config().validate().map_err(ConfigError::Invalid)?;
        if !(0.0..=2.0).contains(&self.escalated_temperature) {
            return Err(ConfigError::Invalid(format!("escalated_temperature {} outside [0, 2]", self.escalated_temperature)));
        }
        if self.verify_timeout_s == 0 {
            return Err(ConfigError::Invalid("verify_timeout_s must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn backend_config(&self) -> BackendConfig {
        BackendConfig {
            endpoint_url: self.endpoint.clone(),
            model_id: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            timeout_seconds: self.timeout_s,
            api_key_source: self.api_key_env.clone(),
        }
    }

    pub fn policy(&self) -> AttemptPolicy {
        AttemptPolicy {
            max_repair_attempts: self.max_repairs,
            base_temperature: self.temperature,
            escalated_temperature: self.escalated_temperature,
            max_format_retries: self.max_format_retries,
        }
    }

    pub fn verify_timeout(&self) -> Duration {
        Duration::from_secs(self.verify_timeout_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), Config::default());
    }

    #[test]
    fn unknown_and_invalid_keys_are_rejected() {
        let mut t = toml::Table::new();
        t.insert("max_repiars".into(), 3.into());
        assert!(matches!(Config::resolve(None, &t), Err(ConfigError::Invalid(_))));
        let mut t = toml::Table::new();
        t.insert("temperature".into(), 3.5.into());
        assert!(Config::resolve(None, &t).is_err());
        let mut t = toml::Table::new();
        t.insert("backend".into(), "carrier-pigeon".into());
        assert!(Config::resolve(None, &t).is_err());
    }
}
