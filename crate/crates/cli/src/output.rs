//! Artifact files, their hashes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use finsler_hj::io::{field_to_string, FieldHeader};
use finsler_hj::{GridDomain, ScalarField};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// JSON has no infinities or NaN; those are written as strings.
pub fn real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("NaN")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes files under one directory and remembers their hashes.
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
    timings: Map<String, Value>,
    started: Instant,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new(), timings: Map::new(), started: Instant::now() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Output { path: parent.to_path_buf(), source })?;
        }
        fs::write(&path, bytes).map_err(|source| CliError::Output { path: path.clone(), source })?;
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ArtifactEntry { path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn json(&mut self, rel: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `<stem>.csv` and/or `<stem>.json`.
    pub fn field(&mut self, stem: &str, u: &ScalarField, g: &GridDomain, formats: &[Format]) -> Result<(), CliError> {
        for f in formats {
            match f {
                Format::Csv => {
                    self.write(&format!("{stem}.csv"), field_to_string(u, g)?.as_bytes())?;
                }
                Format::Json => {
                    let h = FieldHeader::of(g);
                    let value = json!({
                        "nx": h.nx,
                        "ny": h.ny,
                        "bounds": h.bounds,
                        "values": u.values().iter().map(|&v| real(v)).collect::<Vec<_>>(),
                    });
                    self.json(&format!("{stem}.json"), &value)?;
                }
            }
        }
        Ok(())
    }

    /// Records the seconds spent since `since` under `stage`.
    pub fn time(&mut self, stage: &str, since: Instant) {
        self.timings.insert(stage.to_string(), json!(since.elapsed().as_secs_f64()));
    }

    /// Writes the manifest, which lists every other artifact.
    pub fn finish(mut self, command: &str, config_hash: &str, config: &Value, pass: bool) -> Result<PathBuf, CliError> {
        self.timings.insert("total".into(), json!(self.started.elapsed().as_secs_f64()));
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = json!({
            "command": command,
            "config_hash": config_hash,
            "config": config,
            "versions": {
                "fhj": env!("CARGO_PKG_VERSION"),
                "finsler-hj": finsler_hj::VERSION,
            },
            "timings": self.timings,
            "pass": pass,
            "artifacts": entries,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(path)
    }
}
