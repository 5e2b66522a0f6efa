//! Run manifests: the command line, input and output hashes, settings and
//! timings of one command.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::to_json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<FileRecord>,
    pub settings: serde_json::Value,
    pub outputs: Vec<FileRecord>,
    /// Wall-clock seconds; the only entries that differ between reruns.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tracks the files a command reads and writes.
pub struct Session {
    command: String,
    started: Instant,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    timings: BTreeMap<String, f64>,
}

impl Session {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), started: Instant::now(), inputs: Vec::new(), outputs: Vec::new(), timings: BTreeMap::new() }
    }

    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        self.inputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        self.outputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn time(&mut self, name: impl Into<String>, seconds: f64) {
        self.timings.insert(name.into(), seconds);
    }

    /// Writes the manifest to `path`.
    pub fn finish(mut self, path: &Path, seed: Option<u64>, settings: serde_json::Value) -> CliResult<RunManifest> {
        self.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        let manifest = RunManifest {
            tool: "metaflex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            args: std::env::args().collect(),
            seed,
            threads: rayon::current_num_threads(),
            inputs: self.inputs,
            settings,
            outputs: self.outputs,
            timings: self.timings,
        };
        let bytes = to_json(&manifest)?;
        let mut writer = Session::new("");
        writer.write(path, &bytes)?;
        Ok(manifest)
    }
}

/// Default manifest location next to a primary output: `name.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
