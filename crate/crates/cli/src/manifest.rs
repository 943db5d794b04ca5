//! Run manifests and output-file helpers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::settings::Settings;
use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Collects output files under one directory and writes the manifest last.
pub struct Run {
    command: String,
    settings: Settings,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    dir: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Settings,
    seeds: BTreeMap<&'static str, u64>,
    inputs: &'a BTreeMap<String, String>,
    sizes: Value,
    timing: Option<Value>,
    metrics: Value,
    outputs: &'a [String],
}

impl Run {
    pub fn start(command: impl Into<String>, settings: &Settings) -> Result<Self, Failure> {
        let dir = settings.out.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            command: command.into(),
            settings: settings.clone(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            dir,
        })
    }

    /// Reads an input file and records its digest.
    pub fn input(&mut self, path: &Path) -> Result<String, Failure> {
        let text = read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_owned());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes `config.txt` and `manifest.json`; `timing` is dropped under `--no-timing`.
    pub fn finish(mut self, sizes: Value, timing: Value, metrics: Value) -> Result<(), Failure> {
        let config = self.settings.to_config_text();
        self.write("config.txt", config.as_bytes())?;
        self.outputs.push("manifest.json".to_owned());
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.settings,
            seeds: BTreeMap::from([("shuffle", self.settings.seed)]),
            inputs: &self.inputs,
            sizes,
            timing: (!self.settings.no_timing).then_some(timing),
            metrics,
            outputs: &self.outputs,
        };
        let mut s = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::input(e.to_string()))?;
        s.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, s).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}
