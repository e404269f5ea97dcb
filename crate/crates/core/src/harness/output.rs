//! CSV and JSON emission with content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

/// `sha256:<hex>` of a byte string.
pub fn content_id(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Shortest round-trip decimal form; always uses `.`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub content_id: String,
}

/// Collects files written into one output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.files.push(FileRecord { path: name.to_string(), content_id: content_id(bytes) });
        Ok(path)
    }

    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let path = self.root.join(name);
        let wrap = |e: csv::Error| Error::Parse { path: path.clone(), message: e.to_string() };
        w.write_record(header).map_err(wrap)?;
        for row in rows {
            w.write_record(row).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse { path: path.clone(), message: e.to_string() })?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Parse { path: self.root.join(name), message: e.to_string() })?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish<T: Serialize>(mut self, command: &str, parameters: &T) -> Result<PathBuf> {
        let params = serde_json::to_value(parameters)
            .map_err(|e| Error::Parse { path: self.root.join("manifest.json"), message: e.to_string() })?;
        let config_hash = content_id(params.to_string().as_bytes());
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": config_hash,
            "parameters": params,
            "files": self.files,
        });
        self.write_json("manifest.json", &manifest)
    }
}
