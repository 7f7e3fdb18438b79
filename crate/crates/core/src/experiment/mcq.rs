use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::gateway::PromptBundle;
use crate::letter::Letter;

/// Default subcategory list (nephrology board topics).
pub const DEFAULT_CATEGORIES: [&str; 11] = [
    "Hypertension",
    "Glomerular Diseases",
    "AKI",
    "Divalent Ions",
    "Transplantation",
    "CKD",
    "ESRD",
    "Electrolyte",
    "Pregnancy",
    "IR",
    "Infection",
];

pub fn default_categories() -> Vec<String> {
    DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

/// One multiple-choice question. `case` (the patient background) is the
/// retrieval query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McqItem {
    pub id: String,
    pub category: String,
    pub case: String,
    pub question: String,
    pub options: BTreeMap<Letter, String>,
    pub gold: Letter,
}

impl McqItem {
    pub fn bundle(&self, context: String) -> PromptBundle {
        PromptBundle {
            context,
            question: self.question.clone(),
            options: self.options.clone(),
        }
    }

    fn problems(&self, categories: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push("empty id".to_string());
        }
        if !self.options.contains_key(&self.gold) {
            out.push(format!("gold {} is not among the options", self.gold));
        }
        if !categories.iter().any(|c| c == &self.category) {
            out.push(format!("unknown category {:?}", self.category));
        }
        let probe = self.bundle(String::new());
        if let Err(e) = probe.validate() {
            out.push(e.to_string());
        }
        out
    }
}

/// Parses JSON Lines MCQs, validating every item against `categories`.
/// All problems are reported together.
pub fn parse_mcqs(src: &str, categories: &[String]) -> Result<Vec<McqItem>, ExperimentError> {
    let mut items = Vec::new();
    let mut problems = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<McqItem>(line) {
            Ok(item) => {
                for p in item.problems(categories) {
                    problems.push(format!("line {}: question {:?}: {p}", i + 1, item.id));
                }
                if !ids.insert(item.id.clone()) {
                    problems.push(format!("line {}: duplicate question id {:?}", i + 1, item.id));
                }
                items.push(item);
            }
            Err(e) => problems.push(format!("line {}: {e}", i + 1)),
        }
    }
    if items.is_empty() && problems.is_empty() {
        problems.push("MCQ file contains no questions".into());
    }
    if problems.is_empty() {
        Ok(items)
    } else {
        Err(ExperimentError::InvalidMcqs(problems))
    }
}

pub fn load_mcqs(path: impl AsRef<Path>, categories: &[String]) -> Result<Vec<McqItem>, ExperimentError> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    parse_mcqs(&src, categories)
}
