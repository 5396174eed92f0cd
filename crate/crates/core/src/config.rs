//! The single configuration file naming every data file plus the tuning
//! knobs. Paths are resolved against the file's directory; the
//! `ONTOQUERY_CONFIG` environment variable overrides which file is read.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub const CONFIG_ENV: &str = "ONTOQUERY_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub tbox: PathBuf,
    #[serde(default)]
    pub abox: Vec<PathBuf>,
    pub lexicon: PathBuf,
    pub scenario: PathBuf,
    pub templates: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateRule {
    pub name: String,
    pub pattern: String,
    pub property: String,
    /// `ordinal`, `integer` or `text`.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSection {
    pub enabled: Vec<String>,
    pub max_path: usize,
    pub active_fields: Vec<String>,
    pub weights: BTreeMap<String, f64>,
    pub templates: Vec<TemplateRule>,
}

impl Default for MatchingSection {
    fn default() -> Self {
        MatchingSection {
            enabled: ["label", "lexicon", "template", "gazetteer"].map(String::from).to_vec(),
            max_path: 3,
            active_fields: Vec::new(),
            weights: BTreeMap::new(),
            templates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub ambiguity_epsilon: f64,
    pub mint_base: String,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            ambiguity_epsilon: 0.05,
            mint_base: "urn:ontoquery:".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DialogueSection {
    pub max_results: usize,
    pub context_depth: usize,
}

impl Default for DialogueSection {
    fn default() -> Self {
        DialogueSection {
            max_results: 5,
            context_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: DataFiles,
    /// Property name to word-list file.
    #[serde(default)]
    pub gazetteers: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub matching: MatchingSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub dialogue: DialogueSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Config, ConfigError> {
        let mut config: Config = toml::from_str(text)?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::parse(&text, dir)
    }

    /// The path named by `ONTOQUERY_CONFIG`, else `fallback`.
    pub fn path_from_env(fallback: &Path) -> PathBuf {
        std::env::var_os(CONFIG_ENV).map_or_else(|| fallback.to_path_buf(), PathBuf::from)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn read(&self, path: &Path) -> Result<String, ConfigError> {
        let full = self.resolve(path);
        std::fs::read_to_string(&full).map_err(|source| ConfigError::Io { path: full, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = Config::parse(
            "[data]\ntbox = \"t.ttl\"\nlexicon = \"l.ttl\"\nscenario = \"s.toml\"\ntemplates = \"x.toml\"\n",
            "/etc/oq",
        )
        .unwrap();
        assert_eq!(c.dialogue.max_results, 5);
        assert_eq!(c.matching.max_path, 3);
        assert_eq!(c.resolve(Path::new("t.ttl")), PathBuf::from("/etc/oq/t.ttl"));
        assert!(c.data.abox.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[data]\ntbox = \"t\"\nbogus = 1\n", ".").is_err());
    }
}
