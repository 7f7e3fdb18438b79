use serde::{Deserialize, Serialize};

use super::tfidf::TfIdfModel;
use super::vector::{scale_cosine, SparseVector};
use super::IndexError;
use crate::corpus::Chunk;

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk_ids: Vec<usize>,
    pub scores: Vec<f64>,
    pub context: String,
}

/// Immutable retrieval index over one corpus: the fitted model, each chunk's
/// normalized TF-IDF vector, and a term → postings map used for scoring.
#[derive(Debug, Clone)]
pub struct ChunkIndex {
    model: TfIdfModel,
    chunks: Vec<Chunk>,
    vectors: Vec<SparseVector>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl ChunkIndex {
    /// Fits a model on `chunks` and embeds every chunk with it.
    pub fn build(chunks: Vec<Chunk>) -> Result<Self, IndexError> {
        let model = TfIdfModel::fit(&chunks)?;
        let vectors = chunks.iter().map(|c| model.embed(&c.text)).collect();
        Self::from_parts(model, chunks, vectors)
    }

    pub(crate) fn from_parts(
        model: TfIdfModel,
        chunks: Vec<Chunk>,
        vectors: Vec<SparseVector>,
    ) -> Result<Self, IndexError> {
        if chunks.is_empty() {
            return Err(IndexError::NoChunks);
        }
        if chunks.len() != vectors.len() {
            return Err(IndexError::Corrupt(format!(
                "{} chunks but {} vectors",
                chunks.len(),
                vectors.len()
            )));
        }
        let mut postings = vec![Vec::new(); model.vocabulary_size()];
        for (doc, vector) in vectors.iter().enumerate() {
            for &(col, w) in vector.entries() {
                let list = postings.get_mut(col as usize).ok_or_else(|| {
                    IndexError::Corrupt(format!("chunk {doc} references column {col} outside vocabulary"))
                })?;
                list.push((doc as u32, w));
            }
        }
        Ok(Self {
            model,
            chunks,
            vectors,
            postings,
        })
    }

    pub fn model(&self) -> &TfIdfModel {
        &self.model
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Cosine score of `query` against every chunk, in chunk order.
    ///
    /// Only postings of the query's terms are visited. Terms are walked in
    /// increasing column order so each chunk's accumulated dot product matches
    /// [`SparseVector::dot`] exactly.
    pub fn score_all(&self, query: &SparseVector) -> Vec<f64> {
        let mut dots = vec![0.0f64; self.chunks.len()];
        for &(col, qw) in query.entries() {
            for &(doc, dw) in &self.postings[col as usize] {
                dots[doc as usize] += qw * dw;
            }
        }
        dots.iter()
            .zip(&self.vectors)
            .map(|(&dot, v)| scale_cosine(dot, query.norm(), v.norm()))
            .collect()
    }

    /// Top `min(k, M)` chunks by cosine score; ties go to the lower index.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<RetrievalResult, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let q = self.model.embed(query);
        let scores = self.score_all(&q);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let by_rank = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, by_rank);
            order.truncate(k);
        }
        order.sort_unstable_by(by_rank);
        let context = assemble_context(order.iter().map(|&i| self.chunks[i].text.as_str()));
        Ok(RetrievalResult {
            scores: order.iter().map(|&i| scores[i]).collect(),
            chunk_ids: order,
            context,
        })
    }
}

/// Joins retrieved chunk texts with single newlines, in the given order.
pub fn assemble_context<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    texts.into_iter().collect::<Vec<_>>().join("\n")
}

/// Free-function form of [`ChunkIndex::retrieve`].
pub fn retrieve_top_k(index: &ChunkIndex, query: &str, k: usize) -> Result<RetrievalResult, IndexError> {
    index.retrieve(query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{chunk_corpus, Corpus};

    fn index_of(docs: &[&str]) -> ChunkIndex {
        let chunks = docs
            .iter()
            .enumerate()
            .map(|(i, t)| Chunk {
                corpus_name: "t".into(),
                index: i,
                text: t.to_string(),
                word_count: t.split_whitespace().count(),
            })
            .collect();
        ChunkIndex::build(chunks).unwrap()
    }

    #[test]
    fn context_assembly() {
        assert_eq!(assemble_context(["x", "y", "z"]), "x\ny\nz");
        assert_eq!(assemble_context(["x"]), "x");
        assert_eq!(assemble_context(Vec::<&str>::new()), "");
    }

    #[test]
    fn k_larger_than_index_is_clamped() {
        let idx = index_of(&["a b", "a c"]);
        let r = idx.retrieve("b", 3).unwrap();
        assert_eq!(r.chunk_ids, vec![0, 1]);
        assert!(r.scores[0] >= r.scores[1]);
        assert_eq!(r.context, "a b\na c");
    }

    #[test]
    fn ties_go_to_lower_index() {
        let idx = index_of(&["x", "x", "x", "x", "x"]);
        assert_eq!(idx.retrieve("x", 3).unwrap().chunk_ids, vec![0, 1, 2]);
        // all-OOV query: every score is zero
        let r = idx.retrieve("unknown words", 3).unwrap();
        assert_eq!(r.chunk_ids, vec![0, 1, 2]);
        assert!(r.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn best_match_first() {
        let idx = index_of(&["cats purr", "dogs bark loudly", "kidney nephron dialysis"]);
        let r = idx.retrieve("dialysis for the kidney", 1).unwrap();
        assert_eq!(r.chunk_ids, vec![2]);
        assert_eq!(r.context, "kidney nephron dialysis");
    }

    #[test]
    fn zero_k_rejected() {
        let idx = index_of(&["a"]);
        assert!(matches!(idx.retrieve("a", 0), Err(IndexError::ZeroK)));
    }

    #[test]
    fn empty_index_rejected() {
        assert!(matches!(ChunkIndex::build(Vec::new()), Err(IndexError::NoChunks)));
    }

    #[test]
    fn build_from_corpus_chunks() {
        let c = Corpus::from_text("c", "alpha beta gamma delta epsilon").unwrap();
        let idx = ChunkIndex::build(chunk_corpus(&c, 2).unwrap()).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.retrieve("epsilon", 1).unwrap().chunk_ids, vec![2]);
    }
}
