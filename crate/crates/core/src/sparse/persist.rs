//! Line-oriented index file.
//!
//! ```text
//! ragbench-index 1
//! documents <M>
//! terms <V>
//! t <term> <idf as 16 hex digits of the f64 bit pattern>
//! ...                                   (V lines, column order)
//! chunk <index> <word_count> <corpus name>\t<text>
//! vec <norm bits> <col>:<weight bits> ...
//! ...                                   (M chunk/vec pairs)
//! end
//! ```
//!
//! Floats are stored as raw bit patterns so a loaded index scores queries
//! identically to the one that was saved.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::index::ChunkIndex;
use super::tfidf::TfIdfModel;
use super::vector::SparseVector;
use super::IndexError;
use crate::corpus::Chunk;

const MAGIC: &str = "ragbench-index";
const VERSION: u32 = 1;

fn bits(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn parse_bits(s: &str, line: usize) -> Result<f64, IndexError> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| corrupt(line, format!("bad float bits {s:?}")))
}

fn corrupt(line: usize, msg: impl std::fmt::Display) -> IndexError {
    IndexError::Corrupt(format!("line {line}: {msg}"))
}

impl ChunkIndex {
    pub fn write_to(&self, out: impl Write) -> Result<(), IndexError> {
        let mut w = BufWriter::new(out);
        let model = self.model();
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "documents {}", model.num_documents())?;
        writeln!(w, "terms {}", model.vocabulary_size())?;
        for (term, idf) in model.terms().iter().zip(model.idf_values()) {
            writeln!(w, "t {term} {}", bits(*idf))?;
        }
        for (chunk, vector) in self.chunks().iter().zip(self.vectors()) {
            if chunk.corpus_name.contains(['\t', '\n']) {
                return Err(IndexError::Corrupt(format!(
                    "corpus name {:?} contains a tab or newline",
                    chunk.corpus_name
                )));
            }
            writeln!(
                w,
                "chunk {} {} {}\t{}",
                chunk.index, chunk.word_count, chunk.corpus_name, chunk.text
            )?;
            let mut line = format!("vec {}", bits(vector.norm()));
            for &(col, weight) in vector.entries() {
                let _ = write!(line, " {col}:{}", bits(weight));
            }
            writeln!(w, "{line}")?;
        }
        writeln!(w, "end")?;
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn read_from(input: impl std::io::Read) -> Result<Self, IndexError> {
        let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), IndexError> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(IndexError::Corrupt(format!("unexpected end of file, expected {what}"))),
            }
        };

        let (n, header) = next("header")?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v == VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(IndexError::UnsupportedVersion(v.to_string())),
            _ => return Err(corrupt(n, "missing index header")),
        }
        let mut count = |key: &str| -> Result<usize, IndexError> {
            let (n, line) = next(key)?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| corrupt(n, format!("expected `{key} <count>`")))
        };
        let documents = count("documents")?;
        let num_terms = count("terms")?;

        let mut terms = Vec::with_capacity(num_terms);
        let mut idf = Vec::with_capacity(num_terms);
        for _ in 0..num_terms {
            let (n, line) = next("term")?;
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some("t"), Some(term), Some(b), None) if !term.is_empty() => {
                    terms.push(term.to_string());
                    idf.push(parse_bits(b, n)?);
                }
                _ => return Err(corrupt(n, "expected `t <term> <idf>`")),
            }
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IndexError::Corrupt("terms are not in sorted order".into()));
        }

        let mut chunks = Vec::with_capacity(documents);
        let mut vectors = Vec::with_capacity(documents);
        for expected_index in 0..documents {
            let (n, line) = next("chunk")?;
            let rest = line
                .strip_prefix("chunk ")
                .ok_or_else(|| corrupt(n, "expected chunk line"))?;
            let (meta, text) = rest.split_once('\t').ok_or_else(|| corrupt(n, "missing tab"))?;
            let mut meta = meta.splitn(3, ' ');
            let index: usize = meta
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt(n, "bad chunk index"))?;
            let word_count: usize = meta
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt(n, "bad word count"))?;
            let corpus_name = meta.next().unwrap_or_default().to_string();
            if index != expected_index {
                return Err(corrupt(n, format!("chunk index {index}, expected {expected_index}")));
            }
            chunks.push(Chunk {
                corpus_name,
                index,
                text: text.to_string(),
                word_count,
            });

            let (n, line) = next("vec")?;
            let mut parts = line.split(' ');
            if parts.next() != Some("vec") {
                return Err(corrupt(n, "expected vec line"));
            }
            let norm = parse_bits(parts.next().ok_or_else(|| corrupt(n, "missing norm"))?, n)?;
            let mut entries = Vec::new();
            for p in parts {
                let (col, w) = p.split_once(':').ok_or_else(|| corrupt(n, "bad entry"))?;
                let col: u32 = col.parse().map_err(|_| corrupt(n, "bad column"))?;
                entries.push((col, parse_bits(w, n)?));
            }
            vectors.push(SparseVector::from_parts(entries, norm).map_err(|e| corrupt(n, e))?);
        }
        let (n, end) = next("end")?;
        if end != "end" {
            return Err(corrupt(n, "expected `end`"));
        }

        let model = TfIdfModel::from_parts(terms, idf, documents);
        ChunkIndex::from_parts(model, chunks, vectors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
