use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::FileConfig;

pub const MANIFEST_NAME: &str = "run_manifest.json";

/// Resolved settings and the files a subcommand touched.
pub struct Run {
    pub subcommand: &'static str,
    pub out_dir: PathBuf,
    file: FileConfig,
    resolved: BTreeMap<String, Value>,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(subcommand: &'static str, out_dir: PathBuf, file: FileConfig) -> Self {
        Run {
            subcommand,
            out_dir,
            file,
            resolved: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable setting"));
    }

    /// Command-line value, else config file, else `default`.
    pub fn setting<T>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Serialize + Clone,
        T::Err: Display,
    {
        let value = match cli {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(text) => text
                    .parse()
                    .map_err(|e| anyhow::anyhow!("config key {key}: cannot parse {text:?}: {e}"))?,
                None => default,
            },
        };
        self.record(key, value.clone());
        Ok(value)
    }

    pub fn optional(&mut self, key: &str, cli: Option<String>) -> Option<String> {
        let value = cli.or_else(|| self.file.get(key).map(str::to_string));
        self.record(key, &value);
        value
    }

    pub fn input(&mut self, path: &Path) -> Result<BufReader<File>> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
        Ok(BufReader::new(f))
    }

    pub fn output_path(&mut self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(self.out_dir.join(name))
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.output_path(name)?;
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn write_string(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.output_path(name)?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_string(name, &text)
    }

    /// `run_manifest.json`: resolved config, its digest, input digests, outputs.
    /// Contains no timestamps so identical runs produce identical manifests.
    pub fn write_manifest(&mut self, exit_code: u8) -> Result<()> {
        let config = serde_json::to_string(&self.resolved)?;
        let mut inputs = Vec::new();
        for p in &self.inputs {
            let (digest, bytes) = sha256_file(p)?;
            inputs.push(json!({ "path": p.display().to_string(), "sha256": digest, "bytes": bytes }));
        }
        let manifest = json!({
            "tool": "sgkit",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": self.resolved,
            "config_sha256": hex::encode(Sha256::digest(config.as_bytes())),
            "inputs": inputs,
            "outputs": self.outputs,
            "exit_code": exit_code,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::create_dir_all(&self.out_dir)?;
        fs::write(self.out_dir.join(MANIFEST_NAME), text)?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut f = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut h = Sha256::new();
    let bytes = io::copy(&mut f, &mut h)?;
    Ok((hex::encode(h.finalize()), bytes))
}
