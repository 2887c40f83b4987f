//! Run manifest, file hashing and the CSV reader used by `verify`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scenario::Scenario;
use super::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".qkflow.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// A checkable statement the run makes about its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub passed: bool,
    /// Absent when the quantity could not be computed.
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

impl Claim {
    pub fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value: value.is_finite().then_some(value),
            bound: bound.is_finite().then_some(bound),
            detail: detail.into(),
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound,
            value: value.is_finite().then_some(value),
            bound: bound.is_finite().then_some(bound),
            detail: detail.into(),
        }
    }

    pub fn failed(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: None,
            bound: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Alarm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub started: String,
    pub finished: String,
    pub status: RunStatus,
    pub stop_reason: String,
    pub threads: Option<String>,
    pub files: Vec<FileEntry>,
    pub claims: Vec<Claim>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::MissingManifest(dir.display().to_string()))
            }
            Err(e) => return Err(CliError::Io(e.to_string())),
        };
        serde_json::from_str(&text).map_err(|e| CliError::Corrupt(format!("{MANIFEST}: {e}")))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(dir.join(MANIFEST), text + "\n").map_err(|e| CliError::Io(e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `dir/name` and returns its inventory entry.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry, CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(e.to_string()))?;
    }
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(FileEntry {
        path: name.into(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

/// Outcome of re-hashing one inventory entry.
pub fn check_entry(dir: &Path, e: &FileEntry) -> Result<(), String> {
    let bytes = fs::read(dir.join(&e.path)).map_err(|err| format!("unreadable: {err}"))?;
    if bytes.len() as u64 != e.bytes {
        return Err(format!("size {} != {}", bytes.len(), e.bytes));
    }
    let h = sha256_hex(&bytes);
    if h != e.sha256 {
        return Err(format!("sha256 {h} != {}", e.sha256));
    }
    Ok(())
}

/// Numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(name: &str, text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Corrupt(format!("{name}: {m}"));
        let mut lines = text.split("\r\n").filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            if row.len() != header.len() {
                return Err(bad(format!("row {} has {} fields, expected {}", i + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(dir: &Path, name: &str) -> Result<Self, CliError> {
        let text = fs::read_to_string(dir.join(name)).map_err(|e| CliError::Corrupt(format!("{name}: {e}")))?;
        Self::parse(name, &text)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Corrupt(format!("missing column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// CSV writer: `.16e` reals, CRLF line ends.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push_str("\r\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push_str("\r\n");
    }
    s
}
