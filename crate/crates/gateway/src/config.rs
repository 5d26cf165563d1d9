use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use bgate_core::action_parser::RecognizerExtensions;
use bgate_core::host_sim::HostState;
use bgate_core::plan_model::Strictness;
use bgate_core::policy_engine::PolicyTableError;
use bgate_core::{Engine, PolicyTable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8470";
pub const CONFIG_ENV: &str = "BGATE_CONFIG";

/// Gateway configuration file. Every key is optional.
///
/// `strictness` governs sessions created without a profile or preset:
/// `Strict` (the default) refuses them, the other two fall back to the
/// preset of that name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_strictness")]
    pub strictness: Strictness,
    #[serde(default)]
    pub rules_path: Option<PathBuf>,
    #[serde(default)]
    pub policy_table_path: Option<PathBuf>,
    #[serde(default)]
    pub host_fixture_path: Option<PathBuf>,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("bgate-data")
}

fn default_listen() -> String {
    DEFAULT_LISTEN.to_string()
}

fn default_strictness() -> Strictness {
    Strictness::Strict
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            data_dir: default_data_dir(),
            listen: default_listen(),
            strictness: default_strictness(),
            rules_path: None,
            policy_table_path: None,
            host_fixture_path: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Format(String),
    #[error("listen address {0:?} is not host:port")]
    BadListen(String),
    #[error("refusing to listen on non-loopback address {0} without allow-public-listen")]
    PublicListen(SocketAddr),
    #[error("rules file {path}: {message}")]
    Rules { path: PathBuf, message: String },
    #[error("policy table {path}: {source}")]
    PolicyTable { path: PathBuf, source: PolicyTableError },
    #[error("host fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

impl GatewayConfig {
    pub fn from_json(text: &str) -> Result<GatewayConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<GatewayConfig, ConfigError> {
        GatewayConfig::from_json(&read(path)?)
    }

    /// Loopback addresses are always accepted. Anything else, including
    /// the wildcard, needs `allow_public`.
    pub fn listen_addr(&self, allow_public: bool) -> Result<SocketAddr, ConfigError> {
        let addr: SocketAddr = self.listen.parse().map_err(|_| ConfigError::BadListen(self.listen.clone()))?;
        if !addr.ip().is_loopback() && !allow_public {
            return Err(ConfigError::PublicListen(addr));
        }
        Ok(addr)
    }

    /// Engine with the configured rule extensions and policy table. A
    /// table that fails its monotonicity check is an error.
    pub fn build_engine(&self) -> Result<Engine, ConfigError> {
        let mut engine = Engine::default();
        if let Some(path) = &self.rules_path {
            let ext = RecognizerExtensions::from_json(&read(path)?)
                .map_err(|e| ConfigError::Rules { path: path.clone(), message: e.to_string() })?;
            engine = engine.with_extensions(ext);
        }
        if let Some(path) = &self.policy_table_path {
            let table = PolicyTable::from_json(&read(path)?)
                .map_err(|source| ConfigError::PolicyTable { path: path.clone(), source })?;
            engine = engine.with_policy(table);
        }
        Ok(engine)
    }

    pub fn host_fixture(&self) -> Result<HostState, ConfigError> {
        match &self.host_fixture_path {
            None => Ok(HostState::default()),
            Some(path) => HostState::from_json(&read(path)?)
                .map_err(|e| ConfigError::Fixture { path: path.clone(), message: e.to_string() }),
        }
    }

    pub fn traces_dir(&self) -> PathBuf {
        self.data_dir.join("traces")
    }
}
