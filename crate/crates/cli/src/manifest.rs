//! Run manifests and report emission.
//!
//! Every invocation produces a manifest recording the full command line, a
//! hash of the spec file, the tool version, the seed, and the parameters
//! each module ran with.  The manifest id is a SHA-256 digest over exactly
//! the inputs that determine the outputs (command name, parameters, seed,
//! spec hash, tool version) — wall time and file paths are recorded but
//! excluded, so identical inputs always yield the identical id, and every
//! output file cites the id of the run that produced it.

use serde::Serialize;
use serde_json::{Value, json};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Version of the JSON output layout; bumped on any breaking change to the
/// report shapes.
pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Digest over the semantic inputs of a run.  `parameters` must hold every
/// knob that influences the computation; serde_json maps are sorted, so the
/// encoding is canonical.
pub fn manifest_id(
    command: &str,
    tool_version: &str,
    spec_sha256: &str,
    seed: Option<u64>,
    parameters: &Value,
) -> String {
    let key = json!({
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "spec_sha256": spec_sha256,
        "tool_version": tool_version,
    });
    sha256_hex(
        serde_json::to_string(&key)
            .expect("manifest key")
            .as_bytes(),
    )
}

#[derive(Serialize)]
pub struct RunManifest {
    pub id: String,
    pub schema_version: u32,
    pub tool_version: String,
    /// The full command line as invoked.
    pub command_line: Vec<String>,
    pub command: String,
    pub spec_path: String,
    pub spec_sha256: String,
    pub seed: Option<u64>,
    /// Per-module parameter record (everything that shaped the run).
    pub parameters: Value,
    /// Files written by this run, relative to the output directory.
    pub outputs: Vec<String>,
    /// Wall-clock duration; recorded here only, never part of the id.
    pub wall_time_ms: u64,
}

/// Writes reports into one output directory, stamping each file with the
/// manifest id.
pub struct Outputs {
    dir: PathBuf,
    pub id: String,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path, id: String) -> Result<Self, String> {
        fs::create_dir_all(dir)
            .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            id,
            written: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    /// Writes `{schema_version, manifest_id, report}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<PathBuf, String> {
        let wrapped = json!({
            "schema_version": SCHEMA_VERSION,
            "manifest_id": self.id,
            "report": serde_json::to_value(payload).map_err(|e| format!("serialize {name}: {e}"))?,
        });
        let path = self.record(name);
        let mut text =
            serde_json::to_string_pretty(&wrapped).map_err(|e| format!("encode {name}: {e}"))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| format!("write {}: {e}", path.display()))?;
        Ok(path)
    }

    /// Writes a CSV whose first line cites the manifest id, second line is
    /// the header, then one row per record.
    pub fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<PathBuf, String>
    where
        I: IntoIterator<Item = String>,
    {
        let path = self.record(name);
        let mut text = format!("# manifest_id={}\n{header}\n", self.id);
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| format!("write {}: {e}", path.display()))?;
        Ok(path)
    }

    /// Writes the manifest itself and returns its path.
    pub fn finish(
        mut self,
        tool_version: &str,
        command_line: Vec<String>,
        command: &str,
        spec_path: &str,
        spec_sha256: &str,
        seed: Option<u64>,
        parameters: Value,
        wall_time_ms: u64,
    ) -> Result<PathBuf, String> {
        let manifest = RunManifest {
            id: self.id.clone(),
            schema_version: SCHEMA_VERSION,
            tool_version: tool_version.to_string(),
            command_line,
            command: command.to_string(),
            spec_path: spec_path.to_string(),
            spec_sha256: spec_sha256.to_string(),
            seed,
            parameters,
            outputs: std::mem::take(&mut self.written),
            wall_time_ms,
        };
        let path = self.dir.join("manifest.json");
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|e| format!("encode manifest: {e}"))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| format!("write {}: {e}", path.display()))?;
        Ok(path)
    }
}
