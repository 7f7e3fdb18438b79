use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::letter::Letter;

/// One answered question. `extracted` serializes as the letter or
/// `"Unparsed"`; `error` is present only when the endpoint failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub question_id: String,
    pub condition_name: String,
    /// 1-based.
    pub trial_index: usize,
    pub retrieved_chunk_ids: Vec<usize>,
    pub prompt: String,
    pub raw_output: String,
    #[serde(with = "verdict")]
    pub extracted: Option<Letter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    pub correct: bool,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("record serializes");
        s.push('\n');
        s
    }
}

mod verdict {
    use super::*;

    const UNPARSED: &str = "Unparsed";

    pub fn serialize<S: Serializer>(v: &Option<Letter>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(l) => l.serialize(s),
            None => s.serialize_str(UNPARSED),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Letter>, D::Error> {
        let raw = String::deserialize(d)?;
        if raw == UNPARSED {
            return Ok(None);
        }
        raw.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

pub fn record_file_name(condition: &str, trial: usize) -> String {
    format!("{condition}.trial{trial}.jsonl")
}

/// Parses a record file; errors carry the 1-based line number.
pub fn parse_records(src: &str) -> Result<Vec<TrialRecord>, String> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
