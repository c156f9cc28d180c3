use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const META_FILE: &str = "run.json";

/// Run metadata written next to every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunMeta {
    pub run_id: String,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub decisions: Value,
    /// Input file paths; not part of the id.
    pub inputs: Value,
    pub outputs: Vec<String>,
}

impl RunMeta {
    /// The id is a digest of the version, command and resolved config, so
    /// identical invocations share it.
    pub fn new(command: &'static str, config: Value, decisions: Value) -> Self {
        let version = env!("CARGO_PKG_VERSION");
        let key = serde_json::json!({ "version": version, "command": command, "config": config });
        let digest = Sha256::digest(key.to_string().as_bytes());
        Self {
            run_id: hex::encode(&digest[..8]),
            tool: "vbstereo",
            version,
            command,
            config,
            decisions,
            inputs: Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).map_err(Failure::internal)?;
        fs::write(dir.join(META_FILE), text + "\n").map_err(Failure::internal)
    }
}

/// Prepends a `run_id` column to CSV text.
pub fn tag_csv(csv: &[u8], run_id: &str) -> Vec<u8> {
    let text = String::from_utf8_lossy(csv);
    let mut out = String::with_capacity(text.len() + 32);
    for (i, line) in text.lines().enumerate() {
        out.push_str(if i == 0 { "run_id" } else { run_id });
        out.push(',');
        out.push_str(line);
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_depends_on_config_only() {
        let a = RunMeta::new("calib", serde_json::json!({ "seed": 1 }), Value::Null);
        let b = RunMeta::new("calib", serde_json::json!({ "seed": 1 }), serde_json::json!({ "x": 1 }));
        let c = RunMeta::new("calib", serde_json::json!({ "seed": 2 }), Value::Null);
        assert_eq!(a.run_id, b.run_id);
        assert_ne!(a.run_id, c.run_id);
        assert_eq!(a.run_id.len(), 16);
    }

    #[test]
    fn tagging() {
        assert_eq!(tag_csv(b"a,b\n1,2\n", "ff"), b"run_id,a,b\nff,1,2\n");
    }
}
