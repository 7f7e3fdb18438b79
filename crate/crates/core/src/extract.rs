//! Letter extraction from free-form model output with an ordered ensemble of
//! regular expressions, plus grading against the gold letter.
//!
//! Rules are tried in ascending priority; the first rule that matches wins,
//! and within a rule the leftmost match wins. Every pattern must have exactly
//! one capture group holding the letter. Patterns are compiled
//! case-insensitively; a rule that must only accept capital letters scopes
//! that with `(?-i:...)`, which keeps prose such as "the answer is a bit
//! unclear" from being read as option A.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::letter::Letter;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("rule {rule_id}: invalid pattern: {source}")]
    InvalidPattern {
        rule_id: String,
        #[source]
        source: regex::Error,
    },
    #[error("rule {rule_id}: pattern must have exactly one capture group, found {found}")]
    CaptureGroups { rule_id: String, found: usize },
    #[error("rules {first} and {second} share priority {priority}")]
    DuplicatePriority {
        priority: i32,
        first: String,
        second: String,
    },
    #[error("duplicate rule id {0}")]
    DuplicateId(String),
    #[error("ruleset is empty")]
    Empty,
    #[error("rules file line {line}: {msg}")]
    BadRulesLine { line: usize, msg: String },
    #[error("regression corpus line {line}: {msg}")]
    BadCorpusLine { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRule {
    pub rule_id: String,
    pub pattern: String,
    /// Lower fires first.
    pub priority: i32,
}

impl ExtractionRule {
    pub fn new(priority: i32, rule_id: &str, pattern: &str) -> Self {
        Self {
            rule_id: rule_id.into(),
            pattern: pattern.into(),
            priority,
        }
    }
}

/// The verdict for one output. `letter` is `None` (Unparsed) exactly when
/// no rule matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedAnswer {
    pub letter: Option<Letter>,
    pub rule_id: Option<String>,
    /// Byte range of the whole rule match.
    pub matched_span: Option<Range<usize>>,
}

impl ExtractedAnswer {
    pub fn unparsed() -> Self {
        Self {
            letter: None,
            rule_id: None,
            matched_span: None,
        }
    }

    pub fn is_parsed(&self) -> bool {
        self.letter.is_some()
    }
}

impl fmt::Display for ExtractedAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.letter {
            Some(l) => write!(f, "{l}"),
            None => f.write_str("Unparsed"),
        }
    }
}

// Optional emphasis / bracket characters around a letter.
const OPEN: &str = r#"[*_"'(\[]*"#;
const CLOSE: &str = r#"[*_"')\]]*"#;

/// Built-in rules in priority order.
pub fn default_rules() -> Vec<ExtractionRule> {
    let cap = r"((?-i:[A-E]))";
    vec![
        ExtractionRule::new(
            10,
            "answer_is",
            &format!(
                r"\banswer\s+(?:is|would\s+be|will\s+be|should\s+be)\s*:?\s*(?:therefore\s+|likely\s+|probably\s+)?(?:option\s+|choice\s+)?{OPEN}{cap}\b"
            ),
        ),
        ExtractionRule::new(
            15,
            "answer_is_paren",
            r"\banswer\s+(?:is|would\s+be|will\s+be|should\s+be)\s*:?\s*(?:option\s+|choice\s+)?\(([a-e])\)",
        ),
        ExtractionRule::new(
            20,
            "answer_colon",
            &format!(r"\banswer\s*(?:choice\s*)?[:\-]\s*(?:option\s+|choice\s+)?{OPEN}{cap}\b"),
        ),
        ExtractionRule::new(
            25,
            "answer_colon_paren",
            r"\banswer\s*[:\-]\s*\(([a-e])\)",
        ),
        ExtractionRule::new(
            30,
            "leading_letter",
            &format!(r#"\A\s*(?:#+\s*)?{OPEN}{cap}[*_"'\]]*[ \t]*(?:[.):,\-]|\r?\n|\z)"#),
        ),
        ExtractionRule::new(
            35,
            "leading_paren",
            r"\A\s*\(([a-e])\)",
        ),
        ExtractionRule::new(36, "leading_lower_paren", r"\A\s*([a-e])\)"),
        ExtractionRule::new(
            40,
            "option_letter",
            &format!(r"\b(?:option|choice)\s+{OPEN}{cap}\b"),
        ),
        ExtractionRule::new(
            45,
            "choose_letter",
            &format!(r"\b(?:choose|chose|select|pick|go\s+with|going\s+with)\s+{OPEN}{cap}\b"),
        ),
        ExtractionRule::new(
            50,
            "letter_is_correct",
            &format!(r"(?:\A|[^\w]){OPEN}{cap}{CLOSE}\s+(?:is|would\s+be|seems)\s+(?:the\s+)?(?:correct|right|best|most\s+appropriate)\b"),
        ),
        ExtractionRule::new(55, "bold_letter", &format!(r"\*\*{cap}(?:\*\*|[.):])")),
        ExtractionRule::new(60, "paren_letter", r"\(([A-E])\)"),
    ]
}

#[derive(Debug, Clone)]
struct CompiledRule {
    rule: ExtractionRule,
    regex: Regex,
}

/// A validated, compiled, priority-sorted ruleset. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<CompiledRule>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<ExtractionRule>) -> Result<Self, ExtractError> {
        if rules.is_empty() {
            return Err(ExtractError::Empty);
        }
        rules.sort_by_key(|r| r.priority);
        for w in rules.windows(2) {
            if w[0].priority == w[1].priority {
                return Err(ExtractError::DuplicatePriority {
                    priority: w[0].priority,
                    first: w[0].rule_id.clone(),
                    second: w[1].rule_id.clone(),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in rules {
            if !seen.insert(rule.rule_id.clone()) {
                return Err(ExtractError::DuplicateId(rule.rule_id));
            }
            let regex = RegexBuilder::new(&rule.pattern)
                .case_insensitive(true)
                .build()
                .map_err(|source| ExtractError::InvalidPattern {
                    rule_id: rule.rule_id.clone(),
                    source,
                })?;
            let groups = regex.captures_len() - 1;
            if groups != 1 {
                return Err(ExtractError::CaptureGroups {
                    rule_id: rule.rule_id,
                    found: groups,
                });
            }
            compiled.push(CompiledRule { rule, regex });
        }
        Ok(Self { rules: compiled })
    }

    pub fn default_set() -> Self {
        Self::new(default_rules()).expect("built-in rules are valid")
    }

    /// Parses a rules file: `priority<TAB>rule_id<TAB>pattern` per line,
    /// blank lines and `#` comments ignored.
    pub fn parse_rules_file(src: &str) -> Result<Vec<ExtractionRule>, ExtractError> {
        let mut rules = Vec::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let bad = |msg: &str| ExtractError::BadRulesLine {
                line: i + 1,
                msg: msg.into(),
            };
            let mut parts = line.splitn(3, '\t');
            let priority = parts
                .next()
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(|| bad("priority is not an integer"))?;
            let rule_id = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| bad("missing rule id"))?;
            let pattern = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| bad("missing pattern"))?;
            rules.push(ExtractionRule::new(priority, rule_id, pattern));
        }
        Ok(rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractError> {
        Self::new(Self::parse_rules_file(&std::fs::read_to_string(path)?)?)
    }

    pub fn rules(&self) -> impl Iterator<Item = &ExtractionRule> {
        self.rules.iter().map(|c| &c.rule)
    }

    pub fn extract(&self, output: &str) -> ExtractedAnswer {
        for c in &self.rules {
            let Some(caps) = c.regex.captures(output) else { continue };
            let letter = caps
                .get(1)
                .and_then(|m| m.as_str().chars().next())
                .and_then(Letter::from_char);
            if let Some(letter) = letter {
                let whole = caps.get(0).expect("group 0 always present");
                return ExtractedAnswer {
                    letter: Some(letter),
                    rule_id: Some(c.rule.rule_id.clone()),
                    matched_span: Some(whole.range()),
                };
            }
        }
        ExtractedAnswer::unparsed()
    }
}

/// Free-function form of [`RuleSet::extract`].
pub fn extract_choice(output: &str, rules: &RuleSet) -> ExtractedAnswer {
    rules.extract(output)
}

/// Correct iff a letter was extracted and equals `gold`.
pub fn grade(extracted: &ExtractedAnswer, gold: Letter) -> bool {
    extracted.letter == Some(gold)
}

/// One labelled case of the regression corpus (JSON Lines
/// `{"output": ..., "expected": "B" | "Unparsed"}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionCase {
    pub output: String,
    pub expected: String,
}

pub const DEFAULT_REGRESSION_CORPUS: &str = include_str!("../data/extraction_regression.jsonl");

pub fn parse_regression_corpus(src: &str) -> Result<Vec<RegressionCase>, ExtractError> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let case: RegressionCase = serde_json::from_str(l).map_err(|e| ExtractError::BadCorpusLine {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if case.expected != "Unparsed" && case.expected.parse::<Letter>().is_err() {
                return Err(ExtractError::BadCorpusLine {
                    line: i + 1,
                    msg: format!("expected must be A-E or Unparsed, got {:?}", case.expected),
                });
            }
            Ok(case)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegressionFailure {
    pub output: String,
    pub expected: String,
    pub got: String,
    pub rule_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegressionSummary {
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<RegressionFailure>,
}

impl RegressionSummary {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_regression(rules: &RuleSet, cases: &[RegressionCase]) -> RegressionSummary {
    let mut failures = Vec::new();
    for case in cases {
        let got = rules.extract(&case.output);
        let got_s = got.to_string();
        if got_s != case.expected.to_ascii_uppercase() && got_s != case.expected {
            failures.push(RegressionFailure {
                output: case.output.clone(),
                expected: case.expected.clone(),
                got: got_s,
                rule_id: got.rule_id,
            });
        }
    }
    RegressionSummary {
        total: cases.len(),
        passed: cases.len() - failures.len(),
        failures,
    }
}
