use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use sha2::{Digest, Sha256};
use tracing::{debug, info, warn};

use super::config::{Backend, Condition, ExperimentConfig, QueryField};
use super::manifest::{sha256_hex, FileEntry, FileStatus, Manifest};
use super::mcq::{load_mcqs, McqItem};
use super::record::{parse_records, record_file_name, TrialRecord};
use super::ExperimentError;
use crate::corpus::chunk_corpus;
use crate::extract::{ExtractedAnswer, RuleSet};
use crate::gateway::{build_prompt, Completer, CompletionRequest, HttpCompleter, MockCompleter};
use crate::sparse::ChunkIndex;

/// Timestamp source for records.
pub trait Clock: Send + Sync {
    fn now(&self) -> String;
}

/// UTC wall clock, RFC 3339 with milliseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Always returns the same timestamp; makes record files byte-reproducible.
#[derive(Debug, Clone)]
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

/// Seed forwarded to the model for every question of `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"trial");
    h.update(seed.to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Builds the retrieval index for a condition; `None` for Baseline.
pub fn build_condition_index(condition: &Condition, chunk_size: usize) -> Result<Option<ChunkIndex>, ExperimentError> {
    let Some(source) = &condition.corpus else {
        return Ok(None);
    };
    let wrap = |source| ExperimentError::Corpus {
        condition: condition.name.clone(),
        source,
    };
    let corpus = source.load(&condition.name).map_err(wrap)?;
    let chunks = chunk_corpus(&corpus, chunk_size).map_err(wrap)?;
    info!(condition = %condition.name, chunks = chunks.len(), "built index");
    Ok(Some(ChunkIndex::build(chunks)?))
}

fn truncate_chars(mut s: String, max: Option<usize>) -> String {
    if let Some((i, _)) = max.and_then(|m| s.char_indices().nth(m)) {
        s.truncate(i);
    }
    s
}

/// What a run left on disk.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    /// Record files written (fully or partly) by this invocation.
    pub generated: Vec<String>,
    /// Completed files found intact and left untouched.
    pub skipped: Vec<String>,
}

/// Executes an experiment against a completion backend.
pub struct Runner {
    config: ExperimentConfig,
    completer: Arc<dyn Completer>,
    rules: RuleSet,
    clock: Arc<dyn Clock>,
}

impl Runner {
    /// Backend taken from the config; system clock; default extraction rules.
    pub fn from_config(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        let completer: Arc<dyn Completer> = match &config.endpoint {
            Backend::Http(ep) => Arc::new(HttpCompleter::new(ep.clone())?.with_raw_logging(config.log_raw)),
            Backend::Mock { context_aware } => Arc::new(MockCompleter {
                context_aware: *context_aware,
            }),
        };
        Ok(Self::with_completer(config, completer))
    }

    pub fn with_completer(config: ExperimentConfig, completer: Arc<dyn Completer>) -> Self {
        Self {
            config,
            completer,
            rules: RuleSet::default_set(),
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn query<'a>(&self, item: &'a McqItem) -> std::borrow::Cow<'a, str> {
        match self.config.query {
            QueryField::Case => item.case.as_str().into(),
            QueryField::CaseAndQuestion => format!("{}\n{}", item.case, item.question).into(),
        }
    }

    fn answer(
        &self,
        item: &McqItem,
        condition: &Condition,
        index: Option<&ChunkIndex>,
        trial: usize,
        seed: u64,
    ) -> Result<TrialRecord, ExperimentError> {
        let (retrieved_chunk_ids, context) = match index {
            None => (Vec::new(), String::new()),
            Some(ix) => {
                let r = ix.retrieve(&self.query(item), condition.k)?;
                (r.chunk_ids, truncate_chars(r.context, self.config.max_context_chars))
            }
        };
        let bundle = item.bundle(context);
        let prompt = build_prompt(&bundle)?;
        let request = CompletionRequest {
            prompt: &prompt,
            bundle: &bundle,
            gold: item.gold,
            seed,
        };
        let (raw_output, extracted, error) = match self.completer.complete(&request) {
            Ok(c) => {
                let e = self.rules.extract(&c.text);
                (c.text, e, None)
            }
            Err(e) => {
                warn!(question = %item.id, condition = %condition.name, trial, error = %e, "completion failed");
                (String::new(), ExtractedAnswer::unparsed(), Some(e.to_string()))
            }
        };
        Ok(TrialRecord {
            question_id: item.id.clone(),
            condition_name: condition.name.clone(),
            trial_index: trial,
            retrieved_chunk_ids,
            prompt,
            raw_output,
            correct: extracted.letter == Some(item.gold),
            extracted: extracted.letter,
            rule_id: extracted.rule_id,
            timestamp: self.clock.now(),
            error,
        })
    }

    /// Answers `items` in order, handing each record to `sink` in input
    /// order. Up to `parallelism` questions are in flight at once.
    pub fn process<F>(
        &self,
        items: &[McqItem],
        condition: &Condition,
        index: Option<&ChunkIndex>,
        trial: usize,
        mut sink: F,
    ) -> Result<(), ExperimentError>
    where
        F: FnMut(TrialRecord) -> Result<(), ExperimentError>,
    {
        let seed = trial_seed(self.config.seed, trial);
        let workers = self.config.parallelism.clamp(1, items.len().max(1));
        if workers == 1 {
            for item in items {
                sink(self.answer(item, condition, index, trial, seed)?)?;
            }
            return Ok(());
        }
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        std::thread::scope(|s| {
            let (tx, rx) = mpsc::channel();
            for _ in 0..workers {
                let tx = tx.clone();
                let (next, stop) = (&next, &stop);
                s.spawn(move || loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    let r = self.answer(&items[i], condition, index, trial, seed);
                    if tx.send((i, r)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            let mut pending = BTreeMap::new();
            let mut want = 0;
            for (i, r) in rx {
                pending.insert(i, r);
                while let Some(r) = pending.remove(&want) {
                    if let Err(e) = r.and_then(&mut sink) {
                        stop.store(true, Ordering::Relaxed);
                        return Err(e);
                    }
                    want += 1;
                }
            }
            Ok(())
        })
    }

    /// Runs every (condition, trial) not already complete in the output
    /// directory. Conditions and trials run sequentially.
    pub fn run(&self) -> Result<RunArtifact, ExperimentError> {
        let cfg = &self.config;
        cfg.validate()?;
        let mcqs = load_mcqs(&cfg.mcq_path, &cfg.categories)?;
        let dir = cfg.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
        let hash = cfg.config_hash();
        let conditions = cfg.conditions();
        let mut manifest = match Manifest::load(&dir)? {
            Some(m) if m.config_hash != hash => {
                return Err(ExperimentError::ConfigMismatch {
                    expected: hash,
                    found: m.config_hash,
                })
            }
            Some(m) => m,
            None => Manifest::new(
                hash,
                cfg.trials,
                conditions.iter().map(|c| c.name.clone()).collect(),
                mcqs.len(),
            ),
        };
        manifest.save(&dir)?;

        let mut generated = Vec::new();
        let mut skipped = Vec::new();
        for condition in &conditions {
            let mut index: Option<Option<ChunkIndex>> = None;
            for trial in 1..=cfg.trials {
                let name = record_file_name(&condition.name, trial);
                if manifest.is_complete(&name) && dir.join(&name).exists() {
                    manifest.verify(&dir, &name)?;
                    debug!(file = %name, "already complete");
                    skipped.push(name);
                    continue;
                }
                if index.is_none() {
                    index = Some(build_condition_index(condition, cfg.chunk_size)?);
                }
                let ix = index.as_ref().and_then(Option::as_ref);
                self.run_file(&dir, &name, &mcqs, condition, ix, trial, &mut manifest)?;
                generated.push(name);
            }
        }
        info!(generated = generated.len(), skipped = skipped.len(), "run finished");
        Ok(RunArtifact {
            output_dir: dir,
            manifest,
            generated,
            skipped,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_file(
        &self,
        dir: &Path,
        name: &str,
        mcqs: &[McqItem],
        condition: &Condition,
        index: Option<&ChunkIndex>,
        trial: usize,
        manifest: &mut Manifest,
    ) -> Result<(), ExperimentError> {
        let path = dir.join(name);
        let (kept, kept_bytes) = resumable_prefix(&path, mcqs, condition, trial)?;
        if kept > 0 {
            info!(file = %name, kept, "resuming partial record file");
        }
        let io = |e| ExperimentError::io(&path, e);
        let mut file = OpenOptions::new().create(true).write(true).truncate(false).open(&path).map_err(io)?;
        file.set_len(kept_bytes).map_err(io)?;
        file.seek(SeekFrom::End(0)).map_err(io)?;

        let mut entry = FileEntry {
            condition: condition.name.clone(),
            trial,
            status: FileStatus::InProgress,
            sha256: None,
            records: kept,
        };
        manifest.files.insert(name.to_string(), entry.clone());
        manifest.save(dir)?;

        info!(file = %name, questions = mcqs.len() - kept, "running");
        let mut count = kept;
        self.process(&mcqs[kept..], condition, index, trial, |rec| {
            file.write_all(rec.to_json_line().as_bytes()).map_err(io)?;
            count += 1;
            Ok(())
        })?;
        file.sync_all().map_err(io)?;
        drop(file);

        let bytes = std::fs::read(&path).map_err(io)?;
        entry.status = FileStatus::Complete;
        entry.sha256 = Some(sha256_hex(&bytes));
        entry.records = count;
        manifest.files.insert(name.to_string(), entry);
        manifest.save(dir)
    }
}

/// Number of leading records of an interrupted file that are intact and in
/// question order, and their byte length.
fn resumable_prefix(
    path: &Path,
    mcqs: &[McqItem],
    condition: &Condition,
    trial: usize,
) -> Result<(usize, u64), ExperimentError> {
    let src = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((0, 0)),
        Err(e) => return Err(ExperimentError::io(path, e)),
    };
    let mut kept = 0;
    let mut bytes = 0u64;
    for line in src.split_inclusive(|&b| b == b'\n') {
        let Some(item) = mcqs.get(kept) else { break };
        if !line.ends_with(b"\n") {
            break;
        }
        match serde_json::from_slice::<TrialRecord>(line) {
            Ok(r) if r.question_id == item.id && r.condition_name == condition.name && r.trial_index == trial => {
                kept += 1;
                bytes += line.len() as u64;
            }
            _ => break,
        }
    }
    Ok((kept, bytes))
}

/// Answers every MCQ once for `condition` and `trial` without touching
/// disk.
pub fn run_condition(
    config: &ExperimentConfig,
    condition: &Condition,
    trial: usize,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    let mcqs = load_mcqs(&config.mcq_path, &config.categories)?;
    let index = build_condition_index(condition, config.chunk_size)?;
    let runner = Runner::from_config(config.clone())?;
    let mut out = Vec::with_capacity(mcqs.len());
    runner.process(&mcqs, condition, index.as_ref(), trial, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Runs (or resumes) the experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact, ExperimentError> {
    Runner::from_config(config.clone())?.run()
}

/// Checksum-verified records of a finished run, in manifest order.
#[derive(Debug, Clone)]
pub struct RecordSet {
    pub conditions: Vec<String>,
    pub trials: usize,
    /// `groups[c][t]` holds trial `t + 1` of `conditions[c]`, in question order.
    pub groups: Vec<Vec<Vec<TrialRecord>>>,
}

impl RecordSet {
    pub fn get(&self, condition: &str, trial: usize) -> Option<&[TrialRecord]> {
        let c = self.conditions.iter().position(|n| n == condition)?;
        self.groups[c].get(trial.checked_sub(1)?).map(Vec::as_slice)
    }
}

/// Loads every record file listed in the manifest, verifying checksums and
/// that each file answers every question in `mcqs` exactly once.
pub fn load_records(output_dir: impl AsRef<Path>, mcqs: &[McqItem]) -> Result<RecordSet, ExperimentError> {
    let dir = output_dir.as_ref();
    let manifest = Manifest::load(dir)?
        .ok_or_else(|| ExperimentError::Manifest(format!("no manifest in {}", dir.display())))?;
    let gold: HashMap<&str, _> = mcqs.iter().map(|m| (m.id.as_str(), m.gold)).collect();
    let mut problems = Vec::new();
    let mut groups = Vec::new();
    for condition in &manifest.conditions {
        let mut trials = Vec::new();
        for trial in 1..=manifest.trials {
            let name = record_file_name(condition, trial);
            manifest.verify(dir, &name)?;
            let path = dir.join(&name);
            let src = std::fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
            let records = match parse_records(&src) {
                Ok(r) => r,
                Err(e) => {
                    problems.push(format!("{name}: {e}"));
                    trials.push(Vec::new());
                    continue;
                }
            };
            let mut seen = HashSet::new();
            for r in &records {
                let id = &r.question_id;
                if r.condition_name != *condition || r.trial_index != trial {
                    problems.push(format!(
                        "{name}: question {id:?} is labelled {}/trial {}",
                        r.condition_name, r.trial_index
                    ));
                }
                match gold.get(id.as_str()) {
                    None => problems.push(format!("{name}: unknown question id {id:?}")),
                    Some(&g) if r.correct != (r.extracted == Some(g)) => {
                        problems.push(format!("{name}: question {id:?} has an inconsistent correct flag"))
                    }
                    Some(_) => {}
                }
                if !seen.insert(id.as_str()) {
                    problems.push(format!("{name}: duplicate question id {id:?}"));
                }
            }
            for m in mcqs.iter().filter(|m| !seen.contains(m.id.as_str())) {
                problems.push(format!("{name}: missing question id {:?}", m.id));
            }
            trials.push(records);
        }
        groups.push(trials);
    }
    if !problems.is_empty() {
        return Err(ExperimentError::Validation(problems));
    }
    Ok(RecordSet {
        conditions: manifest.conditions.clone(),
        trials: manifest.trials,
        groups,
    })
}
