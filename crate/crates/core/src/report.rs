//! Turns a finished run into accuracy tables: overall and per subcategory,
//! each with mean ± SEM, a Welch grid and Dunnett against Baseline.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{load_records, ExperimentConfig, ExperimentError, McqItem, RecordSet, TrialRecord, BASELINE};
use crate::stats::{render_table, ComparisonTable, GroupSample, StatsError, TableFormat};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{table}: {source}")]
    Stats {
        table: String,
        #[source]
        source: StatsError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        100.0 * self.correct as f64 / self.total as f64
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as usize;
    }
}

pub fn accuracy(records: &[TrialRecord]) -> Accuracy {
    let mut a = Accuracy::default();
    for r in records {
        a.add(r.correct);
    }
    a
}

/// Accuracy per category, in `categories` order. Categories with no
/// questions are included with a zero total.
pub fn category_accuracy(records: &[TrialRecord], mcqs: &[McqItem], categories: &[String]) -> Vec<(String, Accuracy)> {
    let category_of: HashMap<&str, &str> = mcqs.iter().map(|m| (m.id.as_str(), m.category.as_str())).collect();
    let mut out: Vec<(String, Accuracy)> = categories.iter().map(|c| (c.clone(), Accuracy::default())).collect();
    for r in records {
        let Some(cat) = category_of.get(r.question_id.as_str()) else {
            continue;
        };
        if let Some((_, a)) = out.iter_mut().find(|(c, _)| c == cat) {
            a.add(r.correct);
        }
    }
    out
}

/// Per-trial accuracies of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAccuracy {
    pub condition: String,
    pub trials: Vec<Accuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcategoryReport {
    pub category: String,
    pub questions: usize,
    pub accuracies: Vec<ConditionAccuracy>,
    pub table: ComparisonTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub alpha: f64,
    pub questions: usize,
    pub accuracies: Vec<ConditionAccuracy>,
    pub overall: ComparisonTable,
    pub subcategories: Vec<SubcategoryReport>,
}

fn samples(acc: &[ConditionAccuracy]) -> Vec<GroupSample> {
    acc.iter()
        .map(|c| GroupSample::new(&c.condition, c.trials.iter().map(Accuracy::percent).collect()))
        .collect()
}

fn table(title: &str, acc: &[ConditionAccuracy], alpha: f64) -> Result<ComparisonTable, ReportError> {
    let groups = samples(acc);
    let control = groups.iter().any(|g| g.condition_name == BASELINE).then_some(BASELINE);
    ComparisonTable::build(title, &groups, control, alpha).map_err(|source| ReportError::Stats {
        table: title.to_string(),
        source,
    })
}

/// Builds every table. Subcategories without questions are skipped.
pub fn build_report(
    records: &RecordSet,
    mcqs: &[McqItem],
    categories: &[String],
    alpha: f64,
) -> Result<ExperimentReport, ReportError> {
    let per_trial = |f: &dyn Fn(&[TrialRecord]) -> Accuracy| -> Vec<ConditionAccuracy> {
        records
            .conditions
            .iter()
            .zip(&records.groups)
            .map(|(name, trials)| ConditionAccuracy {
                condition: name.clone(),
                trials: trials.iter().map(|t| f(t)).collect(),
            })
            .collect()
    };
    let accuracies = per_trial(&accuracy);
    let overall = table("Percent of MCQ answered correctly", &accuracies, alpha)?;

    let mut subcategories = Vec::new();
    for category in categories {
        let questions = mcqs.iter().filter(|m| &m.category == category).count();
        if questions == 0 {
            continue;
        }
        let acc = per_trial(&|recs| {
            category_accuracy(recs, mcqs, std::slice::from_ref(category))
                .pop()
                .map(|(_, a)| a)
                .unwrap_or_default()
        });
        let table = table(&format!("{category}: percent of MCQ answered correctly"), &acc, alpha)?;
        subcategories.push(SubcategoryReport {
            category: category.clone(),
            questions,
            accuracies: acc,
            table,
        });
    }
    Ok(ExperimentReport {
        alpha,
        questions: mcqs.len(),
        accuracies,
        overall,
        subcategories,
    })
}

/// File-name form of a category: lowercase ASCII alphanumerics joined by '-'.
pub fn slug(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>()
        .join("-")
}

fn write(path: PathBuf, body: &str) -> Result<(), ReportError> {
    std::fs::write(&path, body).map_err(|source| ReportError::Io { path, source })
}

/// Writes `summary.csv`, `summary.md`, `stats.json` and
/// `subcategories/<slug>.{csv,md}` into `dir`. Returns the files written.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let sub = dir.join("subcategories");
    std::fs::create_dir_all(&sub).map_err(|source| ReportError::Io {
        path: sub.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, body: String| -> Result<(), ReportError> {
        write(path.clone(), &body)?;
        written.push(path);
        Ok(())
    };
    put(dir.join("summary.csv"), render_table(&report.overall, TableFormat::Csv))?;
    let mut md = render_table(&report.overall, TableFormat::Markdown);
    if !report.subcategories.is_empty() {
        md.push_str("\nSubcategory tables:\n\n");
        for s in &report.subcategories {
            md.push_str(&format!(
                "- {} ({} questions): subcategories/{}.md\n",
                s.category,
                s.questions,
                slug(&s.category)
            ));
        }
    }
    put(dir.join("summary.md"), md)?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    put(dir.join("stats.json"), json)?;
    for s in &report.subcategories {
        let name = slug(&s.category);
        put(sub.join(format!("{name}.csv")), render_table(&s.table, TableFormat::Csv))?;
        put(sub.join(format!("{name}.md")), render_table(&s.table, TableFormat::Markdown))?;
    }
    Ok(written)
}

/// Loads a run's records and writes every report file into `dir`
/// (defaulting to the run's output directory).
pub fn report_experiment(config: &ExperimentConfig, dir: Option<&Path>, alpha: f64) -> Result<ExperimentReport, ReportError> {
    let mcqs = crate::experiment::load_mcqs(&config.mcq_path, &config.categories)?;
    let records = load_records(&config.output_dir, &mcqs)?;
    let report = build_report(&records, &mcqs, &config.categories, alpha)?;
    write_report(&report, dir.unwrap_or(&config.output_dir))?;
    Ok(report)
}
