use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::table::ComparisonTable;
use super::{mean_sem, GroupSample, StatsError, DEFAULT_ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch (unequal variance) t-test.
///
/// When both samples have zero variance the test degenerates: p = 1 for
/// equal means, p = 0 otherwise.
pub fn welch_t_test(a: &GroupSample, b: &GroupSample) -> Result<WelchResult, StatsError> {
    a.check(2)?;
    b.check(2)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (a.mean(), b.mean());
    let va = a.sum_sq_dev() / (na - 1.0) / na;
    let vb = b.sum_sq_dev() / (nb - 1.0) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        let equal = ma == mb;
        return Ok(WelchResult {
            t_stat: if equal { 0.0 } else { (ma - mb).signum() * f64::INFINITY },
            df: na + nb - 2.0,
            p_value: if equal { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(WelchResult {
        t_stat: t,
        df,
        p_value: p,
    })
}

/// Welch p-value for every unordered pair, mirrored into a symmetric grid.
pub fn pairwise_grid(groups: &[GroupSample]) -> Result<ComparisonTable, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            need: 2,
            got: groups.len(),
        });
    }
    let k = groups.len();
    let mut rows = Vec::with_capacity(k);
    for g in groups {
        let (mean, sem) = mean_sem(&g.values)?;
        rows.push(super::TableRow {
            condition: g.condition_name.clone(),
            mean,
            sem,
        });
    }
    let mut pairwise = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let p = welch_t_test(&groups[i], &groups[j])?.p_value;
            pairwise[i][j] = Some(p);
            pairwise[j][i] = Some(p);
        }
    }
    Ok(ComparisonTable {
        title: String::new(),
        alpha: DEFAULT_ALPHA,
        rows,
        pairwise,
        dunnett: None,
        anova: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: &[f64]) -> GroupSample {
        GroupSample::new("g", v.to_vec())
    }

    #[test]
    fn hand_fixture() {
        let r = welch_t_test(&g(&[1.0, 2.0, 3.0, 4.0]), &g(&[3.0, 4.0, 5.0, 6.0])).unwrap();
        // t = -2 / sqrt(5/3 / 4 * 2)
        assert!((r.t_stat - (-2.0 / (5.0f64 / 6.0).sqrt())).abs() < 1e-12);
        assert!((r.df - 6.0).abs() < 1e-12);
        // independent quadrature value, see tests/stats_oracles.rs
        assert!((r.p_value - 0.070_987_654).abs() < 1e-6);
    }

    #[test]
    fn degenerate_variance() {
        assert_eq!(welch_t_test(&g(&[1.0, 1.0]), &g(&[1.0, 1.0])).unwrap().p_value, 1.0);
        assert_eq!(welch_t_test(&g(&[1.0, 1.0]), &g(&[2.0, 2.0])).unwrap().p_value, 0.0);
    }

    #[test]
    fn identical_groups_not_significant() {
        let gs = vec![
            GroupSample::new("a", vec![40.0, 41.0, 39.5, 40.2]),
            GroupSample::new("b", vec![40.0, 41.0, 39.5, 40.2]),
            GroupSample::new("c", vec![40.0, 41.0, 39.5, 40.2]),
        ];
        let t = pairwise_grid(&gs).unwrap();
        for i in 0..3 {
            assert_eq!(t.pairwise[i][i], None);
            for j in 0..3 {
                if i != j {
                    assert_eq!(t.cell_label(i, j), "NS");
                    assert_eq!(t.pairwise[i][j], t.pairwise[j][i]);
                }
            }
        }
    }
}
