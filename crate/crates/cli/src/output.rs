//! Staged output directory and run manifest.
//!
//! Files are written into a hidden staging directory inside the output
//! directory and moved into place only when the whole command succeeds.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    /// Data rows for CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputRecord>,
    pub files: Vec<FileRecord>,
    /// Excluded from `manifest_hash`.
    pub wall_time_s: f64,
    /// SHA-256 over the manifest without `wall_time_s` and this field.
    pub manifest_hash: String,
}

impl RunManifest {
    pub fn compute_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        let obj = v.as_object_mut().expect("manifest is an object");
        obj.remove("wall_time_s");
        obj.remove("manifest_hash");
        hex(&Sha256::digest(serde_json::to_vec(&v).expect("manifest serializes")))
    }
}

pub struct Output {
    root: PathBuf,
    staging: PathBuf,
    config_hash: String,
    files: Vec<FileRecord>,
    inputs: Vec<InputRecord>,
    started: Instant,
    finished: bool,
    created_root: bool,
}

impl Output {
    pub fn create(root: &Path, config_hash: &str) -> Result<Self, CliError> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        let staging = root.join(format!(".staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(Output {
            root: root.to_path_buf(),
            staging,
            config_hash: config_hash.to_string(),
            files: Vec::new(),
            inputs: Vec::new(),
            started: Instant::now(),
            finished: false,
            created_root,
        })
    }

    /// Comment line that opens every CSV.
    pub fn manifest_comment(&self) -> String {
        format!("manifest: {}", self.config_hash)
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputRecord { path: path.display().to_string(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(())
    }

    /// Writes `rel` through `body`; `.csv` files get their data rows counted.
    pub fn write<F>(&mut self, rel: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        if Path::new(rel).is_absolute() || rel.split('/').any(|c| c == ".." || c.is_empty()) {
            return Err(CliError::Io(format!("refusing to write outside the output directory: {rel}")));
        }
        let path = self.staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        let bytes = fs::read(&path)?;
        let rows = rel.ends_with(".csv").then(|| {
            let text = String::from_utf8_lossy(&bytes);
            text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count().saturating_sub(1)
        });
        self.files.push(FileRecord { path: rel.to_string(), rows, sha256: hex(&Sha256::digest(&bytes)) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        self.write(rel, |w| Ok(spdsim::io::write_json(w, value)?))
    }

    /// Writes the manifest and moves every file into the output directory.
    pub fn finish(mut self, command: &str, master_seed: u64) -> Result<RunManifest, CliError> {
        let mut manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: self.config_hash.clone(),
            master_seed,
            inputs: std::mem::take(&mut self.inputs),
            files: std::mem::take(&mut self.files),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            manifest_hash: String::new(),
        };
        manifest.manifest_hash = manifest.compute_hash();
        let mut w = BufWriter::new(File::create(self.staging.join(MANIFEST_FILE))?);
        spdsim::io::write_json(&mut w, &manifest)?;
        w.flush()?;
        drop(w);
        let mut moved: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
        moved.push(MANIFEST_FILE);
        for rel in moved {
            let target = self.root.join(rel);
            if let Some(dir) = target.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::rename(self.staging.join(rel), target)?;
        }
        fs::remove_dir_all(&self.staging)?;
        self.finished = true;
        Ok(manifest)
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        if !self.finished {
            let _ = fs::remove_dir_all(&self.staging);
            if self.created_root {
                // only succeeds when nothing else was put there
                let _ = fs::remove_dir(&self.root);
            }
        }
    }
}
