use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Audit record written next to every output artifact: what ran, with
/// which effective parameters (including every defaulted one), and
/// which files it produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Vec<String>,
    /// FNV-1a digest of the effective parameter set (after merging
    /// config file and flags), so identical manifests mean identical
    /// inputs regardless of flag order.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Parameters that were neither given as flags nor in the config
    /// file, with the default values used.
    pub defaulted: BTreeMap<String, serde_json::Value>,
    pub effective: serde_json::Value,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<String>,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

impl RunManifest {
    pub fn new(effective: serde_json::Value, seed: Option<u64>, workers: Option<usize>) -> Self {
        let digest = fnv1a_hex(serde_json::to_string(&effective).unwrap_or_default().as_bytes());
        RunManifest {
            tool_version: qrcurves_core::VERSION.to_string(),
            command: std::env::args().collect(),
            config_digest: digest,
            seed,
            workers,
            defaulted: BTreeMap::new(),
            effective,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn note_default(&mut self, name: &str, value: impl Serialize) {
        self.defaulted.insert(
            name.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    /// Finalize and write the manifest next to the primary output.
    pub fn write(mut self, path: &Path) -> anyhow::Result<()> {
        self.finished_unix_ms = now_ms();
        std::fs::write(path, serde_json::to_string_pretty(&self)?)?;
        Ok(())
    }
}

/// Merged view of a JSON config file and command-line flags; flags win.
pub struct ParamSource {
    config: serde_json::Value,
}

impl ParamSource {
    pub fn load(config_path: Option<&str>) -> anyhow::Result<Self> {
        let config = match config_path {
            None => serde_json::Value::Null,
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow::anyhow!("cannot read config file {p}: {e}"))?;
                let v: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| anyhow::anyhow!("malformed config file {p}: {e}"))?;
                if !v.is_object() {
                    anyhow::bail!("malformed config file {p}: top level must be a JSON object");
                }
                v
            }
        };
        Ok(ParamSource { config })
    }

    /// flag value > config value > default; records defaulting.
    pub fn resolve<T: serde::de::DeserializeOwned + Serialize + Clone>(
        &self,
        name: &str,
        flag: Option<T>,
        default: T,
        manifest_defaults: &mut Vec<(String, serde_json::Value)>,
    ) -> anyhow::Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(v) = self.config.get(name) {
            return serde_json::from_value(v.clone())
                .map_err(|e| anyhow::anyhow!("config field {name}: {e}"));
        }
        manifest_defaults
            .push((name.to_string(), serde_json::to_value(default.clone()).unwrap()));
        Ok(default)
    }

    /// Same, for parameters without a usable default.
    pub fn require<T: serde::de::DeserializeOwned>(
        &self,
        name: &str,
        flag: Option<T>,
    ) -> anyhow::Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(v) = self.config.get(name) {
            return serde_json::from_value(v.clone())
                .map_err(|e| anyhow::anyhow!("config field {name}: {e}"));
        }
        anyhow::bail!("missing required parameter --{name} (flag or config)")
    }
}
