//! Trial-level statistics: mean ± SEM, one-way ANOVA, Dunnett many-to-one
//! comparisons, a Welch pairwise grid and table rendering.

mod anova;
mod descriptive;
mod dunnett;
mod table;
mod welch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{one_way_anova, AnovaResult};
pub use descriptive::mean_sem;
pub use dunnett::{
    dunnett_many_to_one, dunnett_with_reference, DunnettComparison, DunnettReference, DunnettResult, DUNNETT_DRAWS, DUNNETT_SEED,
};
pub use table::{p_bucket, render_table, ComparisonTable, DunnettColumn, TableFormat, TableRow, P_BUCKETS};
pub use welch::{pairwise_grid, welch_t_test, WelchResult};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("need at least {need} groups, got {got}")]
    TooFewGroups { need: usize, got: usize },
    #[error("group {0} contains a non-finite value")]
    NonFinite(String),
    #[error("no residual degrees of freedom")]
    NoResidualDf,
}

/// Per-trial accuracy percentages of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub condition_name: String,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(condition_name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            condition_name: condition_name.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sum of squared deviations from the group mean.
    pub(crate) fn sum_sq_dev(&self) -> f64 {
        if self.all_equal() {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum()
    }

    pub(crate) fn all_equal(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub(crate) fn check(&self, min: usize) -> Result<(), StatsError> {
        if self.values.len() < min {
            return Err(StatsError::TooFewValues {
                need: min,
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(self.condition_name.clone()));
        }
        Ok(())
    }
}
