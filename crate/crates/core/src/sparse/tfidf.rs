use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::vector::SparseVector;
use super::IndexError;
use crate::corpus::Chunk;
use crate::text;

/// Fitted TF-IDF vocabulary with smoothed inverse document frequencies.
///
/// Columns are assigned in lexicographic term order, so refitting on the same
/// chunks reproduces the vocabulary and idf array bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    terms: Vec<String>,
    vocabulary: HashMap<String, u32>,
    idf: Vec<f64>,
    num_documents: usize,
}

/// `ln((1 + M) / (1 + df)) + 1`
pub fn smoothed_idf(num_documents: usize, document_frequency: usize) -> f64 {
    ((1.0 + num_documents as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

impl TfIdfModel {
    pub fn fit(chunks: &[Chunk]) -> Result<Self, IndexError> {
        Self::fit_texts(chunks.iter().map(|c| c.text.as_str()))
    }

    pub fn fit_texts<'a>(docs: impl IntoIterator<Item = &'a str>) -> Result<Self, IndexError> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut num_documents = 0;
        for doc in docs {
            num_documents += 1;
            let mut seen: Vec<String> = text::terms(doc).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_default() += 1;
            }
        }
        if num_documents == 0 {
            return Err(IndexError::NoChunks);
        }
        let mut terms = Vec::with_capacity(df.len());
        let mut idf = Vec::with_capacity(df.len());
        for (term, count) in df {
            idf.push(smoothed_idf(num_documents, count));
            terms.push(term);
        }
        Ok(Self::from_parts(terms, idf, num_documents))
    }

    pub(crate) fn from_parts(terms: Vec<String>, idf: Vec<f64>, num_documents: usize) -> Self {
        let vocabulary = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            terms,
            vocabulary,
            idf,
            num_documents,
        }
    }

    pub fn num_documents(&self) -> usize {
        self.num_documents
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf_values(&self) -> &[f64] {
        &self.idf
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.column(term).map(|c| self.idf[c as usize])
    }

    /// Raw-count tf times idf, L2-normalized. Out-of-vocabulary terms are
    /// dropped; an all-OOV text gives the zero vector.
    pub fn embed(&self, text: &str) -> SparseVector {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for term in text::terms(text) {
            if let Some(&col) = self.vocabulary.get(&term) {
                *counts.entry(col).or_default() += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(col, tf)| (col, tf as f64 * self.idf[col as usize]))
            .collect();
        SparseVector::from_entries(entries)
            .expect("sorted columns with positive weights")
            .normalized()
    }
}

/// Free-function form of [`TfIdfModel::fit`].
pub fn fit_tfidf(chunks: &[Chunk]) -> Result<TfIdfModel, IndexError> {
    TfIdfModel::fit(chunks)
}

/// Free-function form of [`TfIdfModel::embed`].
pub fn embed_text(model: &TfIdfModel, text: &str) -> SparseVector {
    model.embed(text)
}
