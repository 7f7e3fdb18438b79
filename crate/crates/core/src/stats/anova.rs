use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{GroupSample, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+inf` when the within-group variance is zero but means differ.
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
}

/// One-way ANOVA with the upper-tail F p-value.
///
/// All observations identical: F = 0, p = 1. Zero within-group variance
/// with differing means: F = +inf, p = 0.
pub fn one_way_anova(groups: &[GroupSample]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            need: 2,
            got: groups.len(),
        });
    }
    for g in groups {
        g.check(2)?;
    }
    let n: usize = groups.iter().map(GroupSample::len).sum();
    let k = groups.len();
    let df_between = k - 1;
    let df_within = n - k;

    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n as f64;
    let all_equal = {
        let first = groups[0].values[0];
        groups.iter().flat_map(|g| &g.values).all(|&v| v == first)
    };
    if all_equal {
        return Ok(AnovaResult {
            f_stat: 0.0,
            df_between,
            df_within,
            p_value: 1.0,
            ss_between: 0.0,
            ss_within: 0.0,
            ss_total: 0.0,
        });
    }

    let ss_between: f64 = groups
        .iter()
        .map(|g| {
            let d = g.mean() - grand;
            g.len() as f64 * d * d
        })
        .sum();
    let ss_within: f64 = groups.iter().map(GroupSample::sum_sq_dev).sum();
    let ss_total: f64 = groups
        .iter()
        .flat_map(|g| &g.values)
        .map(|v| (v - grand) * (v - grand))
        .sum();

    let (f_stat, p_value) = if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
            .expect("positive degrees of freedom");
        (f, dist.sf(f).clamp(0.0, 1.0))
    };
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value,
        ss_between,
        ss_within,
        ss_total,
    })
}
