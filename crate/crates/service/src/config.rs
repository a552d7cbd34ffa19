use std::path::{Path, PathBuf};

use oius::bn::{load_network_with_floor, Network};
use oius::model_tools::models;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// Service settings, read from TOML and then overridden by `OIUS_*`
/// environment variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Network file, or the name of a shipped model.
    pub network: String,
    pub epsilon: f64,
    pub clamp_floor: f64,
    /// Log file holding every record and session.
    pub storage: PathBuf,
    pub bind: String,
    /// When set, requests need `Authorization: Bearer <token>`.
    pub api_token: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            network: "falls-extended".into(),
            epsilon: 1e-2,
            clamp_floor: 1e-4,
            storage: PathBuf::from("oius-records.jsonl"),
            bind: "127.0.0.1:8080".into(),
            api_token: None,
        }
    }
}

const ENV: [&str; 6] = ["OIUS_NETWORK", "OIUS_EPSILON", "OIUS_CLAMP_FLOOR", "OIUS_STORAGE", "OIUS_BIND", "OIUS_API_TOKEN"];

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Defaults, then the file if given, then the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let base = match path {
            Some(p) => Self::from_toml(
                &std::fs::read_to_string(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?,
            )?,
            None => Self::default(),
        };
        base.with_env(|k| std::env::var(k).ok())
    }

    /// Applies overrides looked up through `get`.
    pub fn with_env(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        for key in ENV {
            let Some(value) = get(key) else { continue };
            let number = |v: &str| v.parse::<f64>().map_err(|_| ServiceError::Config(format!("{key}={v} is not a number")));
            match key {
                "OIUS_NETWORK" => self.network = value,
                "OIUS_EPSILON" => self.epsilon = number(&value)?,
                "OIUS_CLAMP_FLOOR" => self.clamp_floor = number(&value)?,
                "OIUS_STORAGE" => self.storage = value.into(),
                "OIUS_BIND" => self.bind = value,
                _ => self.api_token = Some(value).filter(|t| !t.is_empty()),
            }
        }
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), ServiceError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ServiceError::Config(format!("epsilon {} is outside (0, 1)", self.epsilon)));
        }
        if !(self.clamp_floor >= 0.0 && self.clamp_floor < 0.5) {
            return Err(ServiceError::Config(format!("clamp floor {} is outside [0, 0.5)", self.clamp_floor)));
        }
        Ok(())
    }

    /// Loads the configured network with the configured clamp floor.
    pub fn load_network(&self) -> Result<Network, ServiceError> {
        let text = match models::document(&self.network) {
            Some(doc) => doc.to_string(),
            None => std::fs::read_to_string(&self.network)
                .map_err(|e| ServiceError::Config(format!("network `{}`: {e}", self.network)))?,
        };
        load_network_with_floor(&text, self.clamp_floor)
            .map_err(|e| ServiceError::Config(format!("network `{}`: {e}", self.network)))
    }
}
