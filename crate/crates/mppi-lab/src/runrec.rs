//! Machine-readable record of one CLI run: what ran, with which
//! configuration, what it produced, and what it concluded.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// One named check with its measured outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Measured numbers, in prose; self-contained on failure.
    pub detail: String,
}

/// Serialized as `<stem>_record.json` next to the other artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    /// Full command line as invoked.
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Every file this run emitted, the record itself included.
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub verdicts: Vec<Verdict>,
}

impl RunRecord {
    /// Adds the record file to its own output list, then writes it.
    pub fn write(&mut self, dir: &Path, stem: &str) -> std::io::Result<PathBuf> {
        let name = format!("{stem}_record.json");
        self.outputs.push(name.clone());
        let path = dir.join(&name);
        let mut json = serde_json::to_string_pretty(self).expect("static schema serializes");
        json.push('\n');
        std::fs::write(&path, json)?;
        Ok(path)
    }
}
