use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Keys read from the config file; anything else is reported as unknown.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "mode",
    "out",
    "endpoint",
    "model",
    "api_key_env",
    "temperature",
    "include_caption",
    "rules_file",
    "parallelism",
    "max_retries",
    "backoff_ms",
    "timeout_s",
    "generator_endpoint",
    "generator_api_key_env",
    "embed_endpoint",
    "embed_model",
    "embed_api_key_env",
    "embed_dim",
    "hidden",
    "layers",
    "threshold",
    "source_split",
    "top_k",
    "audit_size",
];

/// Flat `key = value` settings. `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", i + 1);
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                bail!("config line {}: empty key", i + 1);
            }
            let mut value = v.trim();
            if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
                value = &value[1..value.len() - 1];
            }
            if values.insert(key.clone(), value.to_string()).is_some() {
                bail!("config line {}: duplicate key {key:?}", i + 1);
            }
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn unknown_keys(&self) -> Vec<&str> {
        self.values
            .keys()
            .map(String::as_str)
            .filter(|k| !KNOWN_KEYS.contains(k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = FileConfig::parse("# endpoint\nendpoint = http://x/v1\n\nmodel=\"gpt-4o\"\nfoo = 1\n").unwrap();
        assert_eq!(c.get("endpoint"), Some("http://x/v1"));
        assert_eq!(c.get("model"), Some("gpt-4o"));
        assert_eq!(c.unknown_keys(), vec!["foo"]);
        assert!(FileConfig::parse("just words").is_err());
        assert!(FileConfig::parse("a=1\na=2").is_err());
        assert!(FileConfig::parse(" = 2").is_err());
    }
}
