//! Run manifests: the resolved parameters and artifact checksums of a CLI
//! invocation, written next to its outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::write_atomic;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Arguments after the program name; replaying them reproduces the run.
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seeds: Vec<u64>,
    /// Reported quantities such as relative errors.
    pub metrics: BTreeMap<String, f64>,
    /// Input path -> SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            argv: argv.to_vec(),
            ..RunManifest::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("serializable parameter");
        self.parameters.insert(key.to_string(), value);
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let sum = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), sum);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let sum = sha256_file(path)?;
        self.outputs.insert(path.display().to_string(), sum);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    /// Outputs whose current checksum differs from the recorded one.
    pub fn verify_outputs(&self) -> Result<Vec<PathBuf>> {
        let mut mismatched = Vec::new();
        for (path, sum) in &self.outputs {
            let path = PathBuf::from(path);
            if !path.exists() || &sha256_file(&path)? != sum {
                mismatched.push(path);
            }
        }
        Ok(mismatched)
    }
}
