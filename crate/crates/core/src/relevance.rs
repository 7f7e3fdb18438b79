//! Corpus relevance measures against a domain term set: unique term matches,
//! percent overlap, word-vector centroid proximity. Also hosts the raw
//! scaled dot-product attention score utility.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{corpus_stats, Corpus, CorpusStats};
use crate::text;

#[derive(Debug, Error)]
pub enum RelevanceError {
    #[error("term set is empty")]
    EmptyTermSet,
    #[error("{matches} matches exceed term set size {size}")]
    MatchesExceedSize { matches: usize, size: usize },
    #[error("no {0} words found in the word-vector table")]
    NoVectors(&'static str),
    #[error("word-vector file line {line}: {msg}")]
    BadVectorLine { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("d_k must be at least 1")]
    ZeroDk,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Case-folded, punctuation-stripped domain vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSet {
    terms: BTreeSet<String>,
}

impl TermSet {
    /// Each whitespace token of each entry becomes a term, so multi-word
    /// entries contribute their words individually.
    pub fn new<S: AsRef<str>>(entries: impl IntoIterator<Item = S>) -> Result<Self, RelevanceError> {
        let terms: BTreeSet<String> = entries
            .into_iter()
            .flat_map(|e| text::terms(e.as_ref()).collect::<Vec<_>>())
            .collect();
        if terms.is_empty() {
            return Err(RelevanceError::EmptyTermSet);
        }
        Ok(Self { terms })
    }

    /// One term per line; blank lines and `#` comments are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RelevanceError> {
        let raw = std::fs::read_to_string(path)?;
        Self::new(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

/// Word → dense vector lookup in the plain-text embedding format
/// (`word v1 v2 ... vd` per line). Keys are case-folded; on a case-folded
/// collision the first vector wins.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn from_pairs<S: AsRef<str>>(
        pairs: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, RelevanceError> {
        let mut dimension = None;
        let mut vectors = HashMap::new();
        for (word, v) in pairs {
            let d = *dimension.get_or_insert(v.len());
            if v.len() != d || d == 0 {
                return Err(RelevanceError::DimensionMismatch(format!(
                    "{:?} has {} components, expected {d}",
                    word.as_ref(),
                    v.len()
                )));
            }
            vectors.entry(word.as_ref().to_lowercase()).or_insert(v);
        }
        Ok(Self {
            dimension: dimension.unwrap_or(0),
            vectors,
        })
    }

    /// Parses the text format. A leading `<count> <dim>` header line, as
    /// written by word2vec tools, is skipped.
    pub fn read_from(input: impl BufRead) -> Result<Self, RelevanceError> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let v = rest
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| RelevanceError::BadVectorLine {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            pairs.push((word.to_string(), v));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RelevanceError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Unweighted mean of the vectors of the in-table words.
    fn centroid<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dimension];
        let mut n = 0usize;
        for w in words {
            if let Some(v) = self.get(w) {
                n += 1;
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
        }
        if n == 0 {
            return None;
        }
        sum.iter_mut().for_each(|s| *s /= n as f64);
        Some(sum)
    }
}

fn corpus_vocabulary(corpus: &Corpus) -> BTreeSet<String> {
    text::terms(&corpus.text).collect()
}

/// Number of distinct terms of `terms` present in the corpus vocabulary.
pub fn term_matches(corpus: &Corpus, terms: &TermSet) -> Result<usize, RelevanceError> {
    if terms.size() == 0 {
        return Err(RelevanceError::EmptyTermSet);
    }
    let vocab: HashSet<String> = text::terms(&corpus.text).collect();
    Ok(terms.iter().filter(|t| vocab.contains(*t)).count())
}

/// `100 * unique_matches / term_set_size`.
pub fn overlap_percent(unique_matches: usize, term_set_size: usize) -> Result<f64, RelevanceError> {
    if term_set_size == 0 {
        return Err(RelevanceError::EmptyTermSet);
    }
    if unique_matches > term_set_size {
        return Err(RelevanceError::MatchesExceedSize {
            matches: unique_matches,
            size: term_set_size,
        });
    }
    Ok(100.0 * unique_matches as f64 / term_set_size as f64)
}

/// Formats a non-negative value to three significant figures
/// (33.333 → "33.3", 2.4732 → "2.47", 0 → "0.0").
pub fn format_sig3(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0.0".into() } else { value.to_string() };
    }
    // Round first so values like 9.996 pick the exponent of their rounded form.
    let mut magnitude = value.abs().log10().floor() as i32;
    let scale = 10f64.powi(2 - magnitude);
    if (value.abs() * scale).round() >= 1000.0 {
        magnitude += 1;
    }
    let decimals = (2 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine similarity between the centroid of the in-table term-set words
/// and the centroid of the in-table unique corpus words.
pub fn corpus_embedding_proximity(
    corpus: &Corpus,
    terms: &TermSet,
    table: &WordVectorTable,
) -> Result<f64, RelevanceError> {
    let term_centroid = table.centroid(terms.iter()).ok_or(RelevanceError::NoVectors("term-set"))?;
    let vocab = corpus_vocabulary(corpus);
    let corpus_centroid = table
        .centroid(vocab.iter().map(String::as_str))
        .ok_or(RelevanceError::NoVectors("corpus"))?;
    Ok(dense_cosine(&term_centroid, &corpus_centroid))
}

/// One row of the corpus comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub corpus_name: String,
    pub unique_matches: usize,
    pub overlap_percent: f64,
    /// `None` when no word-vector table was supplied.
    pub embedding_proximity: Option<f64>,
    pub stats: CorpusStats,
}

pub const REPORT_CSV_HEADER: &str =
    "corpus,unique_matches,overlap_percent,embedding_proximity,lines,words,unique_words,avg_word_length,fk_grade";

impl RelevanceReport {
    pub fn compute(
        corpus: &Corpus,
        terms: &TermSet,
        table: Option<&WordVectorTable>,
    ) -> Result<Self, RelevanceError> {
        let unique_matches = term_matches(corpus, terms)?;
        let embedding_proximity = table
            .map(|t| corpus_embedding_proximity(corpus, terms, t))
            .transpose()?;
        Ok(Self {
            corpus_name: corpus.name.clone(),
            unique_matches,
            overlap_percent: overlap_percent(unique_matches, terms.size())?,
            embedding_proximity,
            stats: corpus_stats(corpus),
        })
    }

    pub fn csv_row(&self) -> String {
        let s = &self.stats;
        format!(
            "{},{},{},{},{},{},{},{:.2},{:.2}",
            csv_field(&self.corpus_name),
            self.unique_matches,
            format_sig3(self.overlap_percent),
            self.embedding_proximity.map(|p| format!("{p:.2}")).unwrap_or_default(),
            s.lines,
            s.words,
            s.unique_words,
            s.avg_word_length,
            s.fk_grade,
        )
    }
}

pub fn render_relevance_csv(reports: &[RelevanceReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Raw scaled dot-product scores `Q_i · K_j / sqrt(d_k)`; no softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionScores {
    pub query_rows: Vec<Vec<f64>>,
    pub key_rows: Vec<Vec<f64>>,
    pub d_k: usize,
    pub scores: Vec<Vec<f64>>,
}

fn shared_width(rows: &[Vec<f64>], what: &str) -> Result<Option<usize>, RelevanceError> {
    let Some(first) = rows.first() else { return Ok(None) };
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
        return Err(RelevanceError::DimensionMismatch(format!(
            "{what} row {i} has {} columns, row 0 has {}",
            r.len(),
            first.len()
        )));
    }
    Ok(Some(first.len()))
}

pub fn attention_score_matrix(
    query_rows: Vec<Vec<f64>>,
    key_rows: Vec<Vec<f64>>,
    d_k: usize,
) -> Result<AttentionScores, RelevanceError> {
    if d_k == 0 {
        return Err(RelevanceError::ZeroDk);
    }
    let dq = shared_width(&query_rows, "Q")?;
    let dk = shared_width(&key_rows, "K")?;
    if let (Some(a), Some(b)) = (dq, dk) {
        if a != b {
            return Err(RelevanceError::DimensionMismatch(format!(
                "Q has inner dimension {a}, K has {b}"
            )));
        }
    }
    let scale = (d_k as f64).sqrt();
    let scores = query_rows
        .iter()
        .map(|q| {
            key_rows
                .iter()
                .map(|k| q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() / scale)
                .collect()
        })
        .collect();
    Ok(AttentionScores {
        query_rows,
        key_rows,
        d_k,
        scores,
    })
}
