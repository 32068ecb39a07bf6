use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::UsageError;

pub const LOCK_FILE: &str = ".courtside.lock";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Held while a run owns its output directory.
struct Lock {
    path: PathBuf,
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// An output directory whose files all carry the run's config hash.
pub struct OutputDir {
    root: PathBuf,
    hash: String,
    files: Vec<String>,
    _lock: Lock,
}

#[derive(Serialize)]
struct Versions {
    courtside: &'static str,
    schema: u32,
    model_format: u32,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    versions: Versions,
    config: &'a C,
    outputs: &'a [String],
    created_at: String,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock_path = root.join(LOCK_FILE);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock_path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    anyhow::Error::from(UsageError(format!(
                        "{} is locked by another run (remove {} if stale)",
                        root.display(),
                        lock_path.display()
                    )))
                } else {
                    anyhow::Error::from(e).context(format!("locking {}", root.display()))
                }
            })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            hash: hash.to_string(),
            files: Vec::new(),
            _lock: Lock { path: lock_path },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn record(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    /// Writes CSV produced by `fill`, prefixed with a `config_hash` column.
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> courtside::Result<()>,
    {
        let mut raw = Vec::new();
        fill(&mut raw)?;
        let path = self.record(name);
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(raw.as_slice());
        let mut writer = csv::Writer::from_writer(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let first = if i == 0 { "config_hash" } else { self.hash.as_str() };
            writer.write_record(std::iter::once(first).chain(record.iter()))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Writes `{"config_hash": ..., "<key>": value}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, value: &T) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("config_hash".into(), self.hash.clone().into());
        doc.insert(key.into(), serde_json::to_value(value)?);
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        let path = self.record(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Writes `manifest.json`; the only output carrying a timestamp.
    pub fn finish<C: Serialize>(self, command: &str, seed: u64, config: &C) -> Result<Vec<String>> {
        let manifest = Manifest {
            command,
            config_hash: &self.hash,
            seed,
            versions: Versions {
                courtside: env!("CARGO_PKG_VERSION"),
                schema: courtside::ingest::SCHEMA_VERSION,
                model_format: courtside::models::MODEL_FORMAT_VERSION,
            },
            config,
            outputs: &self.files,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.files.clone())
    }
}
