//! Experiment orchestration: conditions × trials × questions, with per-trial
//! JSON Lines record files and a checksummed manifest for resumption.

mod config;
mod manifest;
mod mcq;
mod record;
mod runner;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::extract::ExtractError;
use crate::gateway::GatewayError;
use crate::sparse::IndexError;

pub use config::{Backend, Condition, CorpusSource, ExperimentConfig, QueryField, BASELINE, DEFAULT_TRIALS};
pub use manifest::{FileEntry, FileStatus, Manifest, MANIFEST_FILE, MANIFEST_VERSION};
pub use mcq::{default_categories, load_mcqs, parse_mcqs, McqItem, DEFAULT_CATEGORIES};
pub use record::{parse_records, record_file_name, TrialRecord};
pub use runner::{
    build_condition_index, load_records, run_condition, run_experiment, trial_seed, Clock, FixedClock,
    RecordSet, RunArtifact, Runner, SystemClock,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    ConfigParse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),
    #[error("invalid MCQ file:\n  {}", .0.join("\n  "))]
    InvalidMcqs(Vec<String>),
    #[error("output directory was produced by a different config (manifest hash {found}, expected {expected})")]
    ConfigMismatch { expected: String, found: String },
    #[error("checksum mismatch in record file {0}")]
    Checksum(String),
    #[error("record file {0} is not complete")]
    Incomplete(String),
    #[error("corrupt manifest: {0}")]
    Manifest(String),
    #[error("invalid records:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("condition {condition}: {source}")]
    Corpus {
        condition: String,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
