//! TF-IDF vectorization, cosine scoring and top-k chunk retrieval.

mod index;
mod persist;
mod tfidf;
mod vector;

use thiserror::Error;

pub use index::{assemble_context, retrieve_top_k, ChunkIndex, RetrievalResult, DEFAULT_TOP_K};
pub use tfidf::{embed_text, fit_tfidf, smoothed_idf, TfIdfModel};
pub use vector::{cosine_similarity, SparseVector, VectorError};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot build an index from zero chunks")]
    NoChunks,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(String),
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
