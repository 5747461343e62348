//! CSV tables, JSON reports and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A CSV table built row by row.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Long-format plot data: one `(x, quantity, value)` row per point.
pub fn long_format(x: &[f64], series: &[(&str, Vec<Option<f64>>)]) -> String {
    let mut out = String::from("x,quantity,value\n");
    for (name, values) in series {
        for (xi, v) in x.iter().zip(values) {
            if let Some(v) = v {
                out.push_str(&format!("{},{name},{}\n", fmt_f64(*xi), fmt_f64(*v)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Writes files into one output directory and records their digests.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(FileRecord { path: name.to_string(), sha256: hex::encode(Sha256::digest(contents.as_bytes())), bytes: contents.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))? + "\n";
        self.write(name, &text)
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub bigjump_cli: &'static str,
    pub bigjump_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self { bigjump_cli: env!("CARGO_PKG_VERSION"), bigjump_core: bigjump_core::VERSION }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub diagnostics: serde_json::Value,
    /// Every other file of the run, with its SHA-256.
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, 5e-324, f64::MAX] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn long_format_skips_missing() {
        let s = long_format(&[1.0, 2.0], &[("a", vec![Some(0.5), None]), ("b", vec![Some(1.0), Some(2.0)])]);
        assert_eq!(s.lines().count(), 4);
        assert!(s.starts_with("x,quantity,value\n"));
    }

    #[test]
    fn output_dir_records_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("nested")).unwrap();
        out.write("a.csv", "x\n1\n").unwrap();
        assert_eq!(out.files()[0].sha256, hex::encode(Sha256::digest(b"x\n1\n")));
        assert_eq!(fs::read_to_string(out.root().join("a.csv")).unwrap(), "x\n1\n");
    }
}
