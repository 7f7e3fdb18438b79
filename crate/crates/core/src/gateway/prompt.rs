use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::letter::Letter;

/// Everything that goes into one MCQ prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Retrieved context; empty for the no-retrieval baseline.
    pub context: String,
    pub question: String,
    pub options: BTreeMap<Letter, String>,
}

impl PromptBundle {
    /// Checks there are at least two options lettered contiguously from A.
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.options.len() < 2 {
            return Err(GatewayError::TooFewOptions(self.options.len()));
        }
        for (i, letter) in self.options.keys().enumerate() {
            if letter.index() != i {
                return Err(GatewayError::NonContiguousOptions(*letter));
            }
        }
        Ok(())
    }
}

/// Renders the fixed prompt layout:
///
/// ```text
/// Context: {context}
/// Question: {question}
/// A. {option A}
/// B. {option B}
/// Answer:
/// ```
///
/// The `Context:` line is omitted when the context is empty.
pub fn build_prompt(bundle: &PromptBundle) -> Result<String, GatewayError> {
    bundle.validate()?;
    let mut out = String::new();
    if !bundle.context.is_empty() {
        out.push_str("Context: ");
        out.push_str(&bundle.context);
        out.push('\n');
    }
    out.push_str("Question: ");
    out.push_str(&bundle.question);
    out.push('\n');
    for (letter, text) in &bundle.options {
        out.push_str(&format!("{letter}. {text}\n"));
    }
    out.push_str("Answer:");
    Ok(out)
}

/// Inverse of [`build_prompt`] for questions and options without newlines.
pub fn parse_prompt(prompt: &str) -> Option<PromptBundle> {
    let body = prompt.strip_suffix("\nAnswer:")?;
    let lines: Vec<&str> = body.split('\n').collect();
    let first_option = lines.iter().rposition(|l| l.starts_with("A. "))?;
    let mut options = BTreeMap::new();
    for (i, line) in lines[first_option..].iter().enumerate() {
        let letter = Letter::from_index(i)?;
        let text = line.strip_prefix(&format!("{letter}. "))?;
        options.insert(letter, text.to_string());
    }
    let question_line = first_option.checked_sub(1)?;
    let question = lines[question_line].strip_prefix("Question: ")?.to_string();
    let context = if question_line == 0 {
        String::new()
    } else {
        let head = lines[..question_line].join("\n");
        head.strip_prefix("Context: ")?.to_string()
    };
    Some(PromptBundle {
        context,
        question,
        options,
    })
}
