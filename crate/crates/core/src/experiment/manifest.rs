use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use super::ExperimentError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileStatus {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub condition: String,
    pub trial: usize,
    pub status: FileStatus,
    /// Hex SHA-256 of the file bytes, set once complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config_hash: String,
    pub trials: usize,
    pub conditions: Vec<String>,
    pub questions: usize,
    /// Keyed by record file name.
    pub files: BTreeMap<String, FileEntry>,
}

impl Manifest {
    pub fn new(config_hash: String, trials: usize, conditions: Vec<String>, questions: usize) -> Self {
        Self {
            version: MANIFEST_VERSION,
            config_hash,
            trials,
            conditions,
            questions,
            files: BTreeMap::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Option<Self>, ExperimentError> {
        let path = dir.join(MANIFEST_FILE);
        let src = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ExperimentError::io(&path, e)),
        };
        let m: Self = serde_json::from_str(&src).map_err(|e| ExperimentError::Manifest(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(ExperimentError::Manifest(format!("unsupported version {}", m.version)));
        }
        Ok(Some(m))
    }

    /// Writes to a temporary file and renames it over the manifest.
    pub fn save(&self, dir: &Path) -> Result<(), ExperimentError> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let mut body = serde_json::to_string_pretty(self).expect("manifest serializes");
        body.push('\n');
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
            std::fs::rename(&tmp, &path)
        };
        write().map_err(|e| ExperimentError::io(&path, e))
    }

    pub fn is_complete(&self, file: &str) -> bool {
        self.files.get(file).is_some_and(|e| e.status == FileStatus::Complete)
    }

    /// Verifies a completed file's bytes against its recorded checksum.
    pub fn verify(&self, dir: &Path, file: &str) -> Result<(), ExperimentError> {
        let entry = self
            .files
            .get(file)
            .filter(|e| e.status == FileStatus::Complete)
            .ok_or_else(|| ExperimentError::Incomplete(file.to_string()))?;
        let path = dir.join(file);
        let bytes = std::fs::read(&path).map_err(|e| ExperimentError::io(&path, e))?;
        if entry.sha256.as_deref() != Some(sha256_hex(&bytes).as_str()) {
            return Err(ExperimentError::Checksum(file.to_string()));
        }
        Ok(())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}
