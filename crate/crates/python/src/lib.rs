//! Python bindings: corpus utilities, TF-IDF retrieval, prompting and
//! answer extraction, statistics, and experiment run/report entry points.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ragbench_core::corpus::{self, Corpus};
use ragbench_core::experiment::{ExperimentConfig, ExperimentError, FixedClock, Runner};
use ragbench_core::extract::{self, RuleSet};
use ragbench_core::gateway::{self, PromptBundle};
use ragbench_core::relevance;
use ragbench_core::report;
use ragbench_core::sparse::{ChunkIndex as CoreIndex, IndexError, DEFAULT_TOP_K};
use ragbench_core::stats::{self, GroupSample, TableFormat};
use ragbench_core::Letter;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn index_err(e: IndexError) -> PyErr {
    match e {
        IndexError::Io(e) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn experiment_err(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Io { .. } => PyIOError::new_err(e.to_string()),
        ExperimentError::InvalidConfig(_) | ExperimentError::ConfigParse(_) | ExperimentError::InvalidMcqs(_) => {
            value_err(e)
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn letter(s: &str) -> PyResult<Letter> {
    s.parse().map_err(value_err)
}

fn options(map: BTreeMap<String, String>) -> PyResult<BTreeMap<Letter, String>> {
    map.into_iter().map(|(k, v)| Ok((letter(&k)?, v))).collect()
}

/// TF-IDF index over the fixed-size word chunks of one corpus.
#[pyclass(name = "ChunkIndex", module = "ragbench")]
struct ChunkIndex {
    inner: CoreIndex,
}

#[pymethods]
impl ChunkIndex {
    /// Chunks `text` into `chunk_size`-word pieces and indexes them.
    #[new]
    #[pyo3(signature = (text, chunk_size = corpus::DEFAULT_CHUNK_SIZE, name = "corpus"))]
    fn new(text: &str, chunk_size: usize, name: &str) -> PyResult<Self> {
        let c = Corpus::from_text(name, text).map_err(value_err)?;
        let chunks = corpus::chunk_corpus(&c, chunk_size).map_err(value_err)?;
        Ok(Self {
            inner: CoreIndex::build(chunks).map_err(index_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreIndex::load(path).map_err(index_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(index_err)
    }

    /// Returns `(chunk_ids, scores, context)` for the top `k` chunks.
    #[pyo3(signature = (query, k = DEFAULT_TOP_K))]
    fn retrieve(&self, query: &str, k: usize) -> PyResult<(Vec<usize>, Vec<f64>, String)> {
        let r = self.inner.retrieve(query, k).map_err(index_err)?;
        Ok((r.chunk_ids, r.scores, r.context))
    }

    fn chunk_text(&self, index: usize) -> PyResult<String> {
        self.inner
            .chunks()
            .get(index)
            .map(|c| c.text.clone())
            .ok_or_else(|| value_err(format!("no chunk {index}")))
    }

    fn idf(&self, term: &str) -> Option<f64> {
        self.inner.model().idf(term)
    }

    #[getter]
    fn vocabulary_size(&self) -> usize {
        self.inner.model().vocabulary_size()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ChunkIndex(chunks={}, terms={})",
            self.inner.len(),
            self.inner.model().vocabulary_size()
        )
    }
}

#[pyfunction]
fn flesch_kincaid(text: &str) -> PyResult<f64> {
    corpus::flesch_kincaid(text).map_err(value_err)
}

/// Corpus statistics as a dict.
#[pyfunction]
fn corpus_stats<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let s = corpus::corpus_stats(&Corpus::from_text("corpus", text).map_err(value_err)?);
    let d = PyDict::new(py);
    d.set_item("lines", s.lines)?;
    d.set_item("words", s.words)?;
    d.set_item("unique_words", s.unique_words)?;
    d.set_item("avg_word_length", s.avg_word_length)?;
    d.set_item("fk_grade", s.fk_grade)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (count, seed, mean_length = corpus::DEFAULT_RANDOM_WORD_LENGTH))]
fn random_words(count: usize, seed: u64, mean_length: f64) -> PyResult<String> {
    Ok(corpus::generate_random_words(count, seed, mean_length)
        .map_err(value_err)?
        .text)
}

#[pyfunction]
fn overlap_percent(unique_matches: usize, term_set_size: usize) -> PyResult<f64> {
    relevance::overlap_percent(unique_matches, term_set_size).map_err(value_err)
}

/// Raw scaled dot-product scores `Q_i . K_j / sqrt(d_k)`.
#[pyfunction]
fn attention_scores(q: Vec<Vec<f64>>, k: Vec<Vec<f64>>, d_k: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(relevance::attention_score_matrix(q, k, d_k).map_err(value_err)?.scores)
}

#[pyfunction]
#[pyo3(signature = (question, options, context = String::new()))]
fn build_prompt(question: String, options: BTreeMap<String, String>, context: String) -> PyResult<String> {
    let bundle = PromptBundle {
        context,
        question,
        options: self::options(options)?,
    };
    gateway::build_prompt(&bundle).map_err(value_err)
}

/// Deterministic offline model answer for a prompt bundle.
#[pyfunction]
#[pyo3(signature = (seed, question, options, gold, context = String::new(), context_aware = true))]
fn mock_complete(
    seed: u64,
    question: String,
    options: BTreeMap<String, String>,
    gold: &str,
    context: String,
    context_aware: bool,
) -> PyResult<String> {
    let bundle = PromptBundle {
        context,
        question,
        options: self::options(options)?,
    };
    bundle.validate().map_err(value_err)?;
    Ok(gateway::mock_complete(seed, &bundle, letter(gold)?, context_aware).text)
}

/// Returns `(letter, rule_id)`; `letter` is None when nothing matched.
#[pyfunction]
fn extract_answer(output: &str) -> (Option<String>, Option<String>) {
    let a = RuleSet::default_set().extract(output);
    (a.letter.map(|l| l.to_string()), a.rule_id)
}

/// Runs the built-in extraction regression corpus; returns `(passed, total)`.
#[pyfunction]
fn extraction_regression() -> PyResult<(usize, usize)> {
    let cases = extract::parse_regression_corpus(extract::DEFAULT_REGRESSION_CORPUS).map_err(value_err)?;
    let s = extract::run_regression(&RuleSet::default_set(), &cases);
    Ok((s.passed, s.total))
}

#[pyfunction]
fn mean_sem(values: Vec<f64>) -> PyResult<(f64, f64)> {
    stats::mean_sem(&values).map_err(value_err)
}

fn groups(named: BTreeMap<String, Vec<f64>>) -> Vec<GroupSample> {
    named.into_iter().map(|(k, v)| GroupSample::new(k, v)).collect()
}

/// One-way ANOVA over `{name: values}`; returns `(F, df_between, df_within, p)`.
#[pyfunction]
fn one_way_anova(groups: BTreeMap<String, Vec<f64>>) -> PyResult<(f64, usize, usize, f64)> {
    let r = stats::one_way_anova(&self::groups(groups)).map_err(value_err)?;
    Ok((r.f_stat, r.df_between, r.df_within, r.p_value))
}

/// Welch two-sample t-test; returns `(t, df, p)`.
#[pyfunction]
fn welch_t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let r = stats::welch_t_test(&GroupSample::new("a", a), &GroupSample::new("b", b)).map_err(value_err)?;
    Ok((r.t_stat, r.df, r.p_value))
}

/// Dunnett many-to-one; returns `{treatment: adjusted p}`.
#[pyfunction]
#[pyo3(signature = (control, treatments, alpha = stats::DEFAULT_ALPHA))]
fn dunnett(
    control: Vec<f64>,
    treatments: BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let r = stats::dunnett_many_to_one(&GroupSample::new("control", control), &self::groups(treatments), alpha)
        .map_err(value_err)?;
    Ok(r.comparisons.into_iter().map(|c| (c.condition, c.p_adjusted)).collect())
}

/// Renders a comparison table over `{name: per-trial accuracies}`.
#[pyfunction]
#[pyo3(signature = (groups, control = None, title = "", markdown = true, alpha = stats::DEFAULT_ALPHA))]
fn comparison_table(
    groups: Vec<(String, Vec<f64>)>,
    control: Option<&str>,
    title: &str,
    markdown: bool,
    alpha: f64,
) -> PyResult<String> {
    let gs: Vec<GroupSample> = groups.into_iter().map(|(n, v)| GroupSample::new(n, v)).collect();
    let t = stats::ComparisonTable::build(title, &gs, control, alpha).map_err(value_err)?;
    let fmt = if markdown { TableFormat::Markdown } else { TableFormat::Csv };
    Ok(stats::render_table(&t, fmt))
}

/// Runs (or resumes) the experiment in the TOML config at `config`.
/// Returns `(files_written, files_skipped)`.
#[pyfunction]
#[pyo3(signature = (config, seed = None, parallelism = None, timestamp = None))]
fn run_experiment(
    py: Python<'_>,
    config: PathBuf,
    seed: Option<u64>,
    parallelism: Option<usize>,
    timestamp: Option<String>,
) -> PyResult<(usize, usize)> {
    let mut cfg = ExperimentConfig::load(&config).map_err(experiment_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = parallelism {
        cfg.parallelism = p;
    }
    let mut runner = Runner::from_config(cfg).map_err(experiment_err)?;
    if let Some(ts) = timestamp {
        runner = runner.with_clock(Arc::new(FixedClock(ts)));
    }
    let art = py.detach(|| runner.run()).map_err(experiment_err)?;
    Ok((art.generated.len(), art.skipped.len()))
}

/// Writes the report files for a finished run and returns the overall
/// table as markdown.
#[pyfunction]
#[pyo3(signature = (config, out = None, alpha = stats::DEFAULT_ALPHA))]
fn report_experiment(py: Python<'_>, config: PathBuf, out: Option<PathBuf>, alpha: f64) -> PyResult<String> {
    let cfg = ExperimentConfig::load(&config).map_err(experiment_err)?;
    let r = py
        .detach(|| report::report_experiment(&cfg, out.as_deref(), alpha))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(stats::render_table(&r.overall, TableFormat::Markdown))
}

#[pymodule]
fn ragbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ChunkIndex>()?;
    m.add_function(wrap_pyfunction!(flesch_kincaid, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_stats, m)?)?;
    m.add_function(wrap_pyfunction!(random_words, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_percent, m)?)?;
    m.add_function(wrap_pyfunction!(attention_scores, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(mock_complete, m)?)?;
    m.add_function(wrap_pyfunction!(extract_answer, m)?)?;
    m.add_function(wrap_pyfunction!(extraction_regression, m)?)?;
    m.add_function(wrap_pyfunction!(mean_sem, m)?)?;
    m.add_function(wrap_pyfunction!(one_way_anova, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(dunnett, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(report_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
