//! Corpus loading, fixed-size word chunking, descriptive statistics and the
//! seeded random-word corpus generator.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_RANDOM_WORD_LENGTH: f64 = 9.55;
const RANDOM_WORDS_PER_LINE: usize = 20;
const RANDOM_LENGTH_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {0} is not valid UTF-8")]
    InvalidEncoding(PathBuf),
    #[error("corpus {0} is empty")]
    EmptyCorpus(String),
    #[error("chunk size must be at least 1")]
    ZeroChunkSize,
    #[error("word count must be at least 1")]
    ZeroWordCount,
    #[error("random word mean length must be at least {min}, got {got}")]
    MeanLengthTooSmall { min: f64, got: f64 },
    #[error("text contains no words")]
    NoWords,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub text: String,
    /// `None` for generated corpora.
    pub source_path: Option<PathBuf>,
}

impl Corpus {
    /// Builds an in-memory corpus, normalizing line endings.
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self, CorpusError> {
        let name = name.into();
        let text = normalize_newlines(text);
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyCorpus(name));
        }
        Ok(Self {
            name,
            text,
            source_path: None,
        })
    }

    pub fn word_count(&self) -> usize {
        text::raw_tokens(&self.text).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub corpus_name: String,
    pub index: usize,
    /// Tokens joined by single spaces.
    pub text: String,
    pub word_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub lines: usize,
    pub words: usize,
    pub unique_words: usize,
    pub avg_word_length: f64,
    pub fk_grade: f64,
}

fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Reads a UTF-8 text file as a corpus. CRLF and lone CR become `\n`.
pub fn load_corpus(path: impl AsRef<Path>, name: &str) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw = String::from_utf8(bytes).map_err(|_| CorpusError::InvalidEncoding(path.to_path_buf()))?;
    let mut corpus = Corpus::from_text(name, &raw)?;
    corpus.source_path = Some(path.to_path_buf());
    Ok(corpus)
}

/// Splits the corpus's whitespace token stream into consecutive chunks of
/// `chunk_size` tokens. Only the last chunk may be shorter.
pub fn chunk_corpus(corpus: &Corpus, chunk_size: usize) -> Result<Vec<Chunk>, CorpusError> {
    if chunk_size == 0 {
        return Err(CorpusError::ZeroChunkSize);
    }
    let tokens: Vec<&str> = text::raw_tokens(&corpus.text).collect();
    if tokens.is_empty() {
        return Err(CorpusError::EmptyCorpus(corpus.name.clone()));
    }
    Ok(tokens
        .chunks(chunk_size)
        .enumerate()
        .map(|(index, words)| Chunk {
            corpus_name: corpus.name.clone(),
            index,
            text: words.join(" "),
            word_count: words.len(),
        })
        .collect())
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let text = &corpus.text;
    let lines = text.lines().count();
    let mut words = 0usize;
    let mut chars = 0usize;
    let mut unique = HashSet::new();
    for token in text::raw_tokens(text) {
        words += 1;
        if let Some(term) = text::normalize_token(token) {
            chars += term.chars().count();
            unique.insert(term);
        }
    }
    let avg_word_length = if words == 0 {
        0.0
    } else {
        chars as f64 / words as f64
    };
    CorpusStats {
        lines,
        words,
        unique_words: unique.len(),
        avg_word_length,
        fk_grade: flesch_kincaid(text).unwrap_or(f64::NAN),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable heuristic, at least one per word.
pub fn count_syllables(word: &str) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for c in word.chars().flat_map(char::to_lowercase) {
        let vowel = is_vowel(c);
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    groups.max(1)
}

/// Number of sentence terminator runs (`.`, `!`, `?`), at least one.
fn count_sentences(text: &str) -> usize {
    let mut runs = 0;
    let mut in_run = false;
    for c in text.chars() {
        let term = matches!(c, '.' | '!' | '?');
        if term && !in_run {
            runs += 1;
        }
        in_run = term;
    }
    runs.max(1)
}

/// Flesch–Kincaid grade level:
/// `0.39 * words/sentences + 11.8 * syllables/words - 15.59`.
pub fn flesch_kincaid(text: &str) -> Result<f64, CorpusError> {
    let (mut words, mut syllables) = (0usize, 0usize);
    for token in text::raw_tokens(text) {
        words += 1;
        syllables += count_syllables(token);
    }
    if words == 0 {
        return Err(CorpusError::NoWords);
    }
    let sentences = count_sentences(text);
    let words_f = words as f64;
    Ok(0.39 * (words_f / sentences as f64) + 11.8 * (syllables as f64 / words_f) - 15.59)
}

/// Generates `word_count` lowercase pseudo-random words.
///
/// Word lengths are `round(U)` with `U` uniform on
/// `[mean_length - 4, mean_length + 4]`, whose expectation is `mean_length`.
/// Output is 20 words per line and fully determined by `seed`.
pub fn generate_random_words(
    word_count: usize,
    seed: u64,
    mean_length: f64,
) -> Result<Corpus, CorpusError> {
    if word_count == 0 {
        return Err(CorpusError::ZeroWordCount);
    }
    let min = RANDOM_LENGTH_HALF_WIDTH + 0.5;
    if mean_length.is_nan() || mean_length < min {
        return Err(CorpusError::MeanLengthTooSmall {
            min,
            got: mean_length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = mean_length - RANDOM_LENGTH_HALF_WIDTH;
    let hi = mean_length + RANDOM_LENGTH_HALF_WIDTH;
    let mut text = String::with_capacity(word_count * (mean_length as usize + 2));
    for i in 0..word_count {
        if i > 0 {
            text.push(if i % RANDOM_WORDS_PER_LINE == 0 { '\n' } else { ' ' });
        }
        let len = rng.random_range(lo..=hi).round().max(1.0) as usize;
        for _ in 0..len {
            text.push(rng.random_range(b'a'..=b'z') as char);
        }
    }
    text.push('\n');
    Ok(Corpus {
        name: format!("random-words-{seed}"),
        text,
        source_path: None,
    })
}
