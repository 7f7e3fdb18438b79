//! Tokenization shared by chunking, statistics, retrieval and relevance.
//!
//! Two notions of "word" are used throughout the crate:
//!
//! * a *raw token* is any maximal run of non-whitespace characters; chunking
//!   and word counts use these unchanged;
//! * a *term* is a raw token lower-cased with leading and trailing
//!   non-alphanumeric characters removed. Tokens that strip to nothing do not
//!   produce a term. Vocabulary building and term matching use terms.

/// Iterates raw whitespace-separated tokens.
pub fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

/// Strips leading/trailing punctuation and case-folds a raw token.
///
/// Returns `None` when nothing alphanumeric remains.
pub fn normalize_token(token: &str) -> Option<String> {
    let stripped = token.trim_matches(|c: char| !c.is_alphanumeric());
    if stripped.is_empty() {
        None
    } else {
        Some(stripped.to_lowercase())
    }
}

/// Iterates the normalized terms of `text` in order, duplicates included.
pub fn terms(text: &str) -> impl Iterator<Item = String> + '_ {
    raw_tokens(text).filter_map(normalize_token)
}
