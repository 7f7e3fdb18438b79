use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{GroupSample, StatsError};

pub const DUNNETT_DRAWS: usize = 200_000;
pub const DUNNETT_SEED: u64 = 0x0D0E_77E7;

/// Monte Carlo null distribution of `max_i |T_i|` for a Dunnett
/// many-to-one design. It depends only on the group sizes and the residual
/// degrees of freedom, so it can be reused across data sets with that shape.
#[derive(Debug, Clone)]
pub struct DunnettReference {
    control_n: usize,
    treatment_ns: Vec<usize>,
    df: usize,
    seed: u64,
    /// Ascending.
    max_abs_t: Vec<f64>,
}

impl DunnettReference {
    /// Draws `draws` samples of `max_i |T_i|` where
    /// `T_i = (Z_i/sqrt(n_i) - Z_c/sqrt(n_c)) / (S * sqrt(1/n_i + 1/n_c))`,
    /// `Z ~ N(0,1)` i.i.d. and `S^2 ~ chi2(df)/df`.
    pub fn simulate(control_n: usize, treatment_ns: &[usize], df: usize, draws: usize, seed: u64) -> Self {
        assert!(df > 0 && draws > 0 && control_n > 0 && treatment_ns.iter().all(|&n| n > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chi = ChiSquared::new(df as f64).expect("df > 0");
        let inv_sqrt_c = 1.0 / (control_n as f64).sqrt();
        let scales: Vec<(f64, f64)> = treatment_ns
            .iter()
            .map(|&n| {
                let n = n as f64;
                (1.0 / n.sqrt(), (1.0 / n + 1.0 / control_n as f64).sqrt())
            })
            .collect();
        let mut max_abs_t = Vec::with_capacity(draws);
        for _ in 0..draws {
            let zc: f64 = rng.sample(StandardNormal);
            let s = (chi.sample(&mut rng) / df as f64).sqrt();
            let mut m = 0.0f64;
            for &(inv_sqrt_n, se) in &scales {
                let zi: f64 = rng.sample(StandardNormal);
                let t = (zi * inv_sqrt_n - zc * inv_sqrt_c) / (s * se);
                m = m.max(t.abs());
            }
            max_abs_t.push(m);
        }
        max_abs_t.sort_unstable_by(f64::total_cmp);
        Self {
            control_n,
            treatment_ns: treatment_ns.to_vec(),
            df,
            seed,
            max_abs_t,
        }
    }

    pub fn draws(&self) -> usize {
        self.max_abs_t.len()
    }

    pub fn df(&self) -> usize {
        self.df
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matches(&self, control_n: usize, treatment_ns: &[usize], df: usize) -> bool {
        self.control_n == control_n && self.treatment_ns == treatment_ns && self.df == df
    }

    /// Two-sided family-wise adjusted p-value for an observed `|t|`.
    pub fn adjusted_p(&self, t_abs: f64) -> f64 {
        if t_abs.is_nan() {
            return 1.0;
        }
        let below = self.max_abs_t.partition_point(|&x| x < t_abs);
        (self.max_abs_t.len() - below) as f64 / self.max_abs_t.len() as f64
    }

    /// Smallest simulated `|t|` whose adjusted p is below `alpha`.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let n = self.max_abs_t.len();
        let idx = ((1.0 - alpha) * n as f64).ceil() as usize;
        self.max_abs_t[idx.min(n - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnettComparison {
    pub condition: String,
    pub mean_difference: f64,
    pub t_stat: f64,
    /// Pooled-variance two-sided t-test p without multiplicity correction.
    pub p_unadjusted: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnettResult {
    pub control: String,
    pub pooled_variance: f64,
    pub df: usize,
    pub alpha: f64,
    pub draws: usize,
    pub seed: u64,
    pub comparisons: Vec<DunnettComparison>,
}

/// Pooled variance, residual df and per-treatment t statistics.
pub(crate) fn dunnett_statistics(
    control: &GroupSample,
    treatments: &[GroupSample],
) -> Result<(f64, usize, Vec<f64>), StatsError> {
    if treatments.is_empty() {
        return Err(StatsError::TooFewGroups { need: 2, got: 1 });
    }
    control.check(2)?;
    for t in treatments {
        t.check(2)?;
    }
    let all = std::iter::once(control).chain(treatments);
    let n: usize = all.clone().map(GroupSample::len).sum();
    let df = n - (treatments.len() + 1);
    if df == 0 {
        return Err(StatsError::NoResidualDf);
    }
    let ss: f64 = all.map(GroupSample::sum_sq_dev).sum();
    let pooled = ss / df as f64;
    let mc = control.mean();
    let nc = control.len() as f64;
    let ts = treatments
        .iter()
        .map(|t| {
            let diff = t.mean() - mc;
            let se = (pooled * (1.0 / t.len() as f64 + 1.0 / nc)).sqrt();
            if se == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    diff.signum() * f64::INFINITY
                }
            } else {
                diff / se
            }
        })
        .collect();
    Ok((pooled, df, ts))
}

/// Dunnett many-to-one comparison with `reference` supplying the null
/// distribution; the reference must have been simulated for this design.
pub fn dunnett_with_reference(
    control: &GroupSample,
    treatments: &[GroupSample],
    alpha: f64,
    reference: &DunnettReference,
) -> Result<DunnettResult, StatsError> {
    let (pooled, df, ts) = dunnett_statistics(control, treatments)?;
    let ns: Vec<usize> = treatments.iter().map(GroupSample::len).collect();
    assert!(
        reference.matches(control.len(), &ns, df),
        "Dunnett reference simulated for a different design"
    );
    let tdist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    let mc = control.mean();
    let comparisons = treatments
        .iter()
        .zip(ts)
        .map(|(g, t)| {
            let p_adjusted = reference.adjusted_p(t.abs());
            DunnettComparison {
                condition: g.condition_name.clone(),
                mean_difference: g.mean() - mc,
                t_stat: t,
                p_unadjusted: (2.0 * tdist.sf(t.abs())).clamp(0.0, 1.0),
                p_adjusted,
                significant: p_adjusted < alpha,
            }
        })
        .collect();
    Ok(DunnettResult {
        control: control.condition_name.clone(),
        pooled_variance: pooled,
        df,
        alpha,
        draws: reference.draws(),
        seed: reference.seed(),
        comparisons,
    })
}

/// Dunnett's many-to-one test: every treatment against `control`, pooled
/// within-group variance, two-sided p-values adjusted by Monte Carlo over the
/// joint null (`DUNNETT_DRAWS` draws, fixed seed).
pub fn dunnett_many_to_one(
    control: &GroupSample,
    treatments: &[GroupSample],
    alpha: f64,
) -> Result<DunnettResult, StatsError> {
    let (_, df, _) = dunnett_statistics(control, treatments)?;
    let ns: Vec<usize> = treatments.iter().map(GroupSample::len).collect();
    let reference = DunnettReference::simulate(control.len(), &ns, df, DUNNETT_DRAWS, DUNNETT_SEED);
    dunnett_with_reference(control, treatments, alpha, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(name: &str, v: &[f64]) -> GroupSample {
        GroupSample::new(name, v.to_vec())
    }

    #[test]
    fn null_case() {
        let c = g("c", &[40.0, 41.0, 39.0, 40.5]);
        let r = dunnett_many_to_one(&c, &[g("t", &[40.0, 41.0, 39.0, 40.5])], 0.05).unwrap();
        assert!(r.comparisons[0].p_adjusted >= 0.99);
        assert!(!r.comparisons[0].significant);
    }

    #[test]
    fn clear_effect() {
        let c = g("c", &[0.0, 0.1, -0.1, 0.0]);
        let r = dunnett_many_to_one(&c, &[g("t", &[10.0, 10.1, 9.9, 10.0])], 0.05).unwrap();
        assert!(r.comparisons[0].p_adjusted < 0.001);
        assert!(r.comparisons[0].significant);
        assert_eq!(r.draws, DUNNETT_DRAWS);
    }

    #[test]
    fn single_treatment_matches_t_test() {
        // with one treatment, max|T| is |T| ~ t(df): adjusted p ≈ unadjusted p
        let c = g("c", &[1.0, 2.0, 3.0, 4.0]);
        let t = g("t", &[2.5, 3.5, 4.0, 5.5]);
        let r = dunnett_many_to_one(&c, &[t], 0.05).unwrap();
        let cmp = &r.comparisons[0];
        assert!((cmp.p_adjusted - cmp.p_unadjusted).abs() < 0.005, "{cmp:?}");
    }

    #[test]
    fn errors() {
        let c = g("c", &[1.0, 2.0]);
        assert!(matches!(dunnett_many_to_one(&c, &[], 0.05), Err(StatsError::TooFewGroups { .. })));
        assert!(dunnett_many_to_one(&c, &[g("t", &[1.0])], 0.05).is_err());
    }

    #[test]
    fn reference_is_seed_deterministic() {
        let a = DunnettReference::simulate(4, &[4, 4], 9, 5000, 3);
        let b = DunnettReference::simulate(4, &[4, 4], 9, 5000, 3);
        assert_eq!(a.max_abs_t, b.max_abs_t);
        assert!(a.adjusted_p(0.0) == 1.0);
        assert!(a.adjusted_p(f64::INFINITY) == 0.0);
    }
}
