use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{dunnett_many_to_one, one_way_anova, pairwise_grid, AnovaResult, GroupSample, StatsError};
use crate::relevance::csv_field;

/// Display thresholds, ascending. A p-value gets the smallest bucket it is
/// strictly below; p at or above alpha is "NS".
pub const P_BUCKETS: [f64; 7] = [0.001, 0.002, 0.003, 0.004, 0.005, 0.01, 0.05];

pub fn p_bucket(p: f64, alpha: f64) -> String {
    if p.is_nan() || p >= alpha {
        return "NS".into();
    }
    match P_BUCKETS.iter().find(|&&b| p < b && b <= alpha) {
        Some(b) => format!("p < {b}"),
        None => format!("p < {alpha}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub condition: String,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnettColumn {
    pub control: String,
    /// Aligned with the table rows; `None` for the control row.
    pub p_values: Vec<Option<f64>>,
    pub draws: usize,
}

/// Rows of mean/SEM with a symmetric Welch p-value grid, optionally a
/// Dunnett-vs-control column and the omnibus ANOVA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub title: String,
    pub alpha: f64,
    pub rows: Vec<TableRow>,
    /// `pairwise[i][j]` is the Welch p for rows i and j; diagonal `None`.
    pub pairwise: Vec<Vec<Option<f64>>>,
    pub dunnett: Option<DunnettColumn>,
    pub anova: Option<AnovaResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl ComparisonTable {
    /// Full table: Welch grid, ANOVA, and Dunnett against `control` when it
    /// names one of the groups.
    pub fn build(
        title: impl Into<String>,
        groups: &[GroupSample],
        control: Option<&str>,
        alpha: f64,
    ) -> Result<Self, StatsError> {
        let mut table = pairwise_grid(groups)?;
        table.title = title.into();
        table.alpha = alpha;
        table.anova = Some(one_way_anova(groups)?);
        if let Some(ci) = control.and_then(|c| groups.iter().position(|g| g.condition_name == c)) {
            let treatments: Vec<GroupSample> = groups
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != ci)
                .map(|(_, g)| g.clone())
                .collect();
            let result = dunnett_many_to_one(&groups[ci], &treatments, alpha)?;
            let mut adjusted = result.comparisons.iter().map(|c| c.p_adjusted);
            let p_values = (0..groups.len())
                .map(|i| if i == ci { None } else { adjusted.next() })
                .collect();
            table.dunnett = Some(DunnettColumn {
                control: groups[ci].condition_name.clone(),
                p_values,
                draws: result.draws,
            });
        }
        Ok(table)
    }

    pub fn cell_label(&self, i: usize, j: usize) -> String {
        match self.pairwise[i][j] {
            None => "--".into(),
            Some(p) => p_bucket(p, self.alpha),
        }
    }

    fn dunnett_label(&self, i: usize) -> Option<String> {
        self.dunnett.as_ref().map(|d| match d.p_values[i] {
            None => "--".into(),
            Some(p) => p_bucket(p, self.alpha),
        })
    }
}

fn fmt_mean(v: f64) -> String {
    format!("{v:.1}")
}

fn fmt_sem(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_raw(p: Option<f64>) -> String {
    p.map(|p| p.to_string()).unwrap_or_default()
}

/// Byte-stable rendering: means to one decimal, SEM to two.
pub fn render_table(table: &ComparisonTable, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => render_csv(table),
        TableFormat::Markdown => render_markdown(table),
    }
}

fn render_csv(t: &ComparisonTable) -> String {
    let names: Vec<&str> = t.rows.iter().map(|r| r.condition.as_str()).collect();
    let mut header = vec!["source".to_string(), "mean".into(), "sem".into()];
    header.extend(names.iter().map(|n| csv_field(&format!("vs_{n}"))));
    if let Some(d) = &t.dunnett {
        header.push(csv_field(&format!("dunnett_vs_{}", d.control)));
    }
    header.extend(names.iter().map(|n| csv_field(&format!("p_vs_{n}"))));
    if let Some(d) = &t.dunnett {
        header.push(csv_field(&format!("p_dunnett_vs_{}", d.control)));
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in t.rows.iter().enumerate() {
        let mut cells = vec![csv_field(&row.condition), fmt_mean(row.mean), fmt_sem(row.sem)];
        cells.extend((0..t.rows.len()).map(|j| t.cell_label(i, j)));
        cells.extend(t.dunnett_label(i));
        cells.extend((0..t.rows.len()).map(|j| fmt_raw(t.pairwise[i][j])));
        if let Some(d) = &t.dunnett {
            cells.push(fmt_raw(d.p_values[i]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn render_markdown(t: &ComparisonTable) -> String {
    let mut out = String::new();
    if !t.title.is_empty() {
        let _ = writeln!(out, "### {}\n", t.title);
    }
    let mut header = vec!["Source".to_string(), "Mean (%)".into(), "SEM".into()];
    header.extend(t.rows.iter().map(|r| format!("vs {}", md_escape(&r.condition))));
    let mut align = vec![":--", "--:", "--:"];
    align.extend(std::iter::repeat_n(":-:", t.rows.len()));
    if let Some(d) = &t.dunnett {
        header.push(format!("Dunnett vs {}", md_escape(&d.control)));
        align.push(":-:");
    }
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", align.join("|"));
    for (i, row) in t.rows.iter().enumerate() {
        let mut cells = vec![md_escape(&row.condition), fmt_mean(row.mean), fmt_sem(row.sem)];
        cells.extend((0..t.rows.len()).map(|j| t.cell_label(i, j)));
        cells.extend(t.dunnett_label(i));
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push('\n');
    if let Some(a) = &t.anova {
        let f = if a.f_stat.is_finite() {
            format!("{:.2}", a.f_stat)
        } else {
            "inf".into()
        };
        let _ = writeln!(
            out,
            "One-way ANOVA: F({}, {}) = {}, {}.",
            a.df_between,
            a.df_within,
            f,
            match p_bucket(a.p_value, t.alpha).as_str() {
                "NS" => "NS".to_string(),
                b => b.to_string(),
            }
        );
    }
    let _ = write!(out, "\"vs\" columns: two-sided Welch t-test.");
    if let Some(d) = &t.dunnett {
        let _ = write!(
            out,
            " Dunnett column: many-to-one against {}, Monte Carlo adjusted ({} draws).",
            d.control, d.draws
        );
    }
    let _ = writeln!(out, " Significance threshold p < {}; NS = not significant.", t.alpha);
    out
}
