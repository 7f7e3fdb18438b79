use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mcq::default_categories;
use super::ExperimentError;
use crate::corpus::{
    generate_random_words, load_corpus, Corpus, CorpusError, DEFAULT_CHUNK_SIZE, DEFAULT_RANDOM_WORD_LENGTH,
};
use crate::gateway::ModelEndpoint;
use crate::sparse::DEFAULT_TOP_K;

pub const BASELINE: &str = "Baseline";
pub const DEFAULT_TRIALS: usize = 4;

/// Where completions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Backend {
    Http(ModelEndpoint),
    /// Deterministic offline model, see [`crate::gateway::mock_complete`].
    Mock {
        #[serde(default = "yes")]
        context_aware: bool,
    },
}

fn yes() -> bool {
    true
}

/// A retrieval corpus: a UTF-8 text file, or a generated random-word corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusSource {
    File(PathBuf),
    RandomWords {
        random_words: usize,
        seed: u64,
        #[serde(default = "default_mean_length")]
        mean_length: f64,
    },
}

fn default_mean_length() -> f64 {
    DEFAULT_RANDOM_WORD_LENGTH
}

impl CorpusSource {
    /// Reads or generates the corpus, naming it `name`.
    pub fn load(&self, name: &str) -> Result<Corpus, CorpusError> {
        match self {
            Self::File(path) => load_corpus(path, name),
            Self::RandomWords {
                random_words,
                seed,
                mean_length,
            } => {
                let mut c = generate_random_words(*random_words, *seed, *mean_length)?;
                c.name = name.to_string();
                Ok(c)
            }
        }
    }
}

/// Which MCQ fields form the retrieval query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryField {
    /// Patient background only.
    #[default]
    Case,
    CaseAndQuestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mcq_path: PathBuf,
    #[serde(default)]
    pub corpora: BTreeMap<String, CorpusSource>,
    #[serde(default)]
    pub term_set_path: Option<PathBuf>,
    /// Plain-text word vectors for the relevance report.
    #[serde(default)]
    pub embeddings_path: Option<PathBuf>,
    pub endpoint: Backend,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub output_dir: PathBuf,
    /// Truncates the retrieved context to this many characters.
    #[serde(default)]
    pub max_context_chars: Option<usize>,
    #[serde(default = "default_categories")]
    pub categories: Vec<String>,
    #[serde(default)]
    pub query: QueryField,
    #[serde(default)]
    pub log_raw: bool,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_k() -> usize {
    DEFAULT_TOP_K
}
fn default_chunk_size() -> usize {
    DEFAULT_CHUNK_SIZE
}
fn default_parallelism() -> usize {
    1
}

/// One experimental arm. Baseline has no corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub corpus: Option<CorpusSource>,
    pub k: usize,
}

impl Condition {
    pub fn is_baseline(&self) -> bool {
        self.corpus.is_none()
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    /// Minimal config with the documented defaults.
    pub fn new(mcq_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, endpoint: Backend) -> Self {
        Self {
            mcq_path: mcq_path.into(),
            corpora: BTreeMap::new(),
            term_set_path: None,
            embeddings_path: None,
            endpoint,
            trials: DEFAULT_TRIALS,
            k: DEFAULT_TOP_K,
            chunk_size: DEFAULT_CHUNK_SIZE,
            seed: 0,
            parallelism: 1,
            output_dir: output_dir.into(),
            max_context_chars: None,
            categories: default_categories(),
            query: QueryField::Case,
            log_raw: false,
        }
    }

    pub fn from_toml(src: &str) -> Result<Self, ExperimentError> {
        toml::from_str(src).map_err(|e| ExperimentError::ConfigParse(e.to_string()))
    }

    /// Reads a TOML config. Relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut cfg = Self::from_toml(&src)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.mcq_path);
        resolve(base, &mut self.output_dir);
        for p in self.term_set_path.iter_mut().chain(self.embeddings_path.iter_mut()) {
            resolve(base, p);
        }
        for src in self.corpora.values_mut() {
            if let CorpusSource::File(p) = src {
                resolve(base, p);
            }
        }
    }

    /// Every problem with the config, reported together.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut problems = Vec::new();
        if self.trials == 0 {
            problems.push("trials must be at least 1".to_string());
        }
        if self.parallelism == 0 {
            problems.push("parallelism must be at least 1".to_string());
        }
        if self.k == 0 {
            problems.push("k must be at least 1".to_string());
        }
        if self.chunk_size == 0 {
            problems.push("chunk_size must be at least 1".to_string());
        }
        if self.categories.is_empty() {
            problems.push("categories must not be empty".to_string());
        }
        if !self.mcq_path.is_file() {
            problems.push(format!("mcq_path {} does not exist", self.mcq_path.display()));
        }
        for p in self.term_set_path.iter().chain(&self.embeddings_path) {
            if !p.is_file() {
                problems.push(format!("{} does not exist", p.display()));
            }
        }
        for (name, src) in &self.corpora {
            if name.eq_ignore_ascii_case(BASELINE) {
                problems.push(format!("corpus name {name:?} is reserved for the no-retrieval condition"));
            }
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_'))
            {
                problems.push(format!(
                    "corpus name {name:?} must be non-empty ASCII letters, digits, '-' or '_'"
                ));
            }
            match src {
                CorpusSource::File(p) if !p.is_file() => {
                    problems.push(format!("corpus {name}: {} does not exist", p.display()))
                }
                CorpusSource::RandomWords { random_words: 0, .. } => {
                    problems.push(format!("corpus {name}: random_words must be at least 1"))
                }
                _ => {}
            }
        }
        if let Backend::Http(ep) = &self.endpoint {
            if let Err(e) = ep.validate() {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::InvalidConfig(problems))
        }
    }

    /// Baseline first, then one condition per corpus in name order.
    pub fn conditions(&self) -> Vec<Condition> {
        std::iter::once(Condition {
            name: BASELINE.to_string(),
            corpus: None,
            k: self.k,
        })
        .chain(self.corpora.iter().map(|(name, src)| Condition {
            name: name.clone(),
            corpus: Some(src.clone()),
            k: self.k,
        }))
        .collect()
    }

    /// SHA-256 over every setting that affects record contents (not
    /// parallelism, output location or logging).
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            mcq_path: &'a Path,
            corpora: &'a BTreeMap<String, CorpusSource>,
            endpoint: &'a Backend,
            trials: usize,
            k: usize,
            chunk_size: usize,
            seed: u64,
            max_context_chars: Option<usize>,
            categories: &'a [String],
            query: QueryField,
        }
        let view = Hashed {
            mcq_path: &self.mcq_path,
            corpora: &self.corpora,
            endpoint: &self.endpoint,
            trials: self.trials,
            k: self.k,
            chunk_size: self.chunk_size,
            seed: self.seed,
            max_context_chars: self.max_context_chars,
            categories: &self.categories,
            query: self.query,
        };
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
mcq_path = "mcq.jsonl"
output_dir = "out"
trials = 2
seed = 7

[corpora]
nephsap = "corpora/nephsap.txt"
random = { random_words = 5000, seed = 3 }

[endpoint]
backend = "http"
base_url = "http://localhost:11434/v1"
model_name = "llama3"
api_key_env = "OPENAI_API_KEY"
"#;

    #[test]
    fn parses_and_resolves() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.resolve_paths(Path::new("/data/exp"));
        assert_eq!(cfg.mcq_path, Path::new("/data/exp/mcq.jsonl"));
        assert_eq!(
            cfg.corpora["nephsap"],
            CorpusSource::File("/data/exp/corpora/nephsap.txt".into())
        );
        assert!(matches!(
            cfg.corpora["random"],
            CorpusSource::RandomWords { random_words: 5000, seed: 3, .. }
        ));
        assert_eq!((cfg.k, cfg.chunk_size, cfg.parallelism), (3, 1000, 1));
        assert_eq!(cfg.categories.len(), 11);
        let Backend::Http(ep) = &cfg.endpoint else { panic!() };
        assert_eq!(ep.max_retries, 3);
        let names: Vec<_> = cfg.conditions().into_iter().map(|c| c.name).collect();
        assert_eq!(names, vec!["Baseline", "nephsap", "random"]);
    }

    #[test]
    fn mock_backend_and_unknown_fields() {
        let cfg = ExperimentConfig::from_toml(
            "mcq_path='m'\noutput_dir='o'\n[endpoint]\nbackend='mock'\n",
        )
        .unwrap();
        assert_eq!(cfg.endpoint, Backend::Mock { context_aware: true });
        assert!(ExperimentConfig::from_toml("mcq_path='m'\noutput_dir='o'\ntrails=3\n[endpoint]\nbackend='mock'\n").is_err());
    }

    #[test]
    fn validation_lists_all_problems() {
        let mut cfg = ExperimentConfig::new("/nope/mcq.jsonl", "/tmp/o", Backend::Mock { context_aware: true });
        cfg.trials = 0;
        cfg.parallelism = 0;
        cfg.corpora.insert("Baseline".into(), CorpusSource::File("/nope.txt".into()));
        let Err(ExperimentError::InvalidConfig(p)) = cfg.validate() else { panic!() };
        assert_eq!(p.len(), 5, "{p:#?}");
    }

    #[test]
    fn hash_ignores_parallelism_only() {
        let a = ExperimentConfig::new("m", "o", Backend::Mock { context_aware: true });
        let mut b = a.clone();
        b.parallelism = 8;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
