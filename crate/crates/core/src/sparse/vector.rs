use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("indices must be strictly increasing (position {0})")]
    Unsorted(usize),
    #[error("weight at position {0} is zero or not finite")]
    BadWeight(usize),
}

/// Sparse real vector with strictly increasing column indices, non-zero
/// weights and a cached Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
    norm: f64,
}

impl SparseVector {
    pub fn zero() -> Self {
        Self {
            entries: Vec::new(),
            norm: 0.0,
        }
    }

    pub fn from_entries(entries: Vec<(u32, f64)>) -> Result<Self, VectorError> {
        for (pos, w) in entries.iter().enumerate() {
            if w.1 == 0.0 || !w.1.is_finite() {
                return Err(VectorError::BadWeight(pos));
            }
            if pos > 0 && entries[pos - 1].0 >= w.0 {
                return Err(VectorError::Unsorted(pos));
            }
        }
        let norm = euclidean(&entries);
        Ok(Self { entries, norm })
    }

    /// Rebuilds a vector with a previously computed norm (persistence path).
    pub(crate) fn from_parts(entries: Vec<(u32, f64)>, norm: f64) -> Result<Self, VectorError> {
        let mut v = Self::from_entries(entries)?;
        v.norm = norm;
        Ok(v)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, column: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&column, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Scales to unit length; the zero vector stays zero.
    pub fn normalized(&self) -> Self {
        if self.norm == 0.0 {
            return Self::zero();
        }
        let entries: Vec<_> = self.entries.iter().map(|&(i, w)| (i, w / self.norm)).collect();
        let norm = euclidean(&entries);
        Self { entries, norm }
    }

    /// Merge-join dot product, summed in increasing column order.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

fn euclidean(entries: &[(u32, f64)]) -> f64 {
    entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
}

/// `u·v / (‖u‖‖v‖)`, or 0.0 when either vector is zero.
pub fn cosine_similarity(u: &SparseVector, v: &SparseVector) -> f64 {
    scale_cosine(u.dot(v), u.norm, v.norm)
}

/// Shared final step so the inverted-index scorer and [`cosine_similarity`]
/// produce bit-identical scores for the same accumulated dot product.
pub(crate) fn scale_cosine(dot: f64, norm_u: f64, norm_v: f64) -> f64 {
    if norm_u == 0.0 || norm_v == 0.0 {
        0.0
    } else {
        dot / (norm_u * norm_v)
    }
}
