use std::path::Path;

use serde::Deserialize;

use super::Failure;

/// Defaults for optional flags, read from TOML. Flags given on the command
/// line win over the file.
///
/// ```toml
/// [eval]
/// seed = 42
/// replicates = 1000
/// dataset = "trivia_qa"
///
/// [embed]
/// endpoint = "http://localhost:8080/embed"
/// batch_size = 64
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub score: ScoreConfig,
    pub eval: EvalConfig,
    pub simulate: SimulateConfig,
    pub embed: EmbedConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub se: Option<bool>,
    pub nli_endpoint: Option<String>,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub threshold: Option<f64>,
    pub dataset: Option<String>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub endpoint: Option<String>,
    pub batch_size: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub concurrency: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage("config_error", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|m| Failure::usage("config_error", format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
