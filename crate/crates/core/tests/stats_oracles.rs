//! Statistics checked against independent numerical oracles.

mod common;

use common::quadrature::{f1_upper, t_two_sided};
use proptest::prelude::*;
use ragbench_core::stats::{
    dunnett_with_reference, mean_sem, one_way_anova, welch_t_test, DunnettReference, GroupSample,
};

fn g(name: &str, v: &[f64]) -> GroupSample {
    GroupSample::new(name, v.to_vec())
}

#[test]
fn quadrature_sanity() {
    // t(1) is Cauchy: P(|T| >= 1) = 1/2
    assert!((t_two_sided(1.0, 1.0) - 0.5).abs() < 1e-9);
    // t(2) has closed form 1 - t / sqrt(2 + t^2)
    let t: f64 = 1.7;
    assert!((t_two_sided(t, 2.0) - (1.0 - t / (2.0 + t * t).sqrt())).abs() < 1e-9);
    assert!((t_two_sided(0.0, 5.0) - 1.0).abs() < 1e-12);
}

#[test]
fn welch_fixture_against_quadrature() {
    let r = welch_t_test(&g("a", &[1.0, 2.0, 3.0, 4.0]), &g("b", &[3.0, 4.0, 5.0, 6.0])).unwrap();
    assert!((r.t_stat + 2.190_890).abs() < 1e-6, "{r:?}");
    assert_eq!(r.df, 6.0);
    let oracle = t_two_sided(r.t_stat, r.df);
    assert!((r.p_value - oracle).abs() < 1e-8, "{} vs {oracle}", r.p_value);
    assert!((oracle - 0.070_987_654).abs() < 1e-6);
}

#[test]
fn anova_fixture_against_quadrature() {
    let r = one_way_anova(&[g("a", &[1.0, 2.0, 3.0]), g("b", &[2.0, 3.0, 4.0])]).unwrap();
    assert!((r.f_stat - 1.5).abs() < 1e-12);
    assert_eq!((r.df_between, r.df_within), (1, 4));
    let oracle = f1_upper(1.5, 4.0);
    assert!((r.p_value - oracle).abs() < 1e-6, "{} vs {oracle}", r.p_value);
    assert!((r.p_value - 0.288).abs() < 0.005);
}

#[test]
fn mean_sem_hand_values() {
    let (m, s) = mean_sem(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, 2..7)
}

fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64]| {
        let mu = m(v);
        v.iter().map(|x| (x - mu).powi(2)).sum::<f64>()
    };
    let df = (a.len() + b.len() - 2) as f64;
    let sp2 = (ss(a) + ss(b)) / df;
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    ((m(a) - m(b)) / se, df)
}

fn spread(v: &[f64]) -> bool {
    v.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welch_p_matches_quadrature(a in sample(), b in sample()) {
        prop_assume!(spread(&a) && spread(&b));
        let r = welch_t_test(&g("a", &a), &g("b", &b)).unwrap();
        prop_assume!(r.df >= 1.0);
        let oracle = t_two_sided(r.t_stat, r.df);
        prop_assert!((r.p_value - oracle).abs() < 1e-6, "{} vs {}", r.p_value, oracle);
    }

    #[test]
    fn two_group_anova_is_pooled_t_squared(a in sample(), b in sample()) {
        prop_assume!(spread(&a) || spread(&b));
        let r = one_way_anova(&[g("a", &a), g("b", &b)]).unwrap();
        let (t, df) = pooled_t(&a, &b);
        prop_assert!((r.f_stat - t * t).abs() <= 1e-9 * (1.0 + t * t));
        prop_assert!((r.p_value - t_two_sided(t, df)).abs() < 1e-6);
    }
}

#[test]
fn dunnett_adjusted_never_below_unadjusted() {
    // one reference for the fixed design: control + 3 treatments, n = 4 each
    let reference = DunnettReference::simulate(4, &[4, 4, 4], 12, 200_000, 0x5EED);
    let draws = reference.draws() as f64;
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(200));
    let groups = prop::collection::vec(prop::collection::vec(0.0f64..100.0, 4..=4), 4..=4);
    runner
        .run(&groups, |gs| {
            let control = g("c", &gs[0]);
            let treatments: Vec<_> = gs[1..].iter().enumerate().map(|(i, v)| g(&format!("t{i}"), v)).collect();
            let r = dunnett_with_reference(&control, &treatments, 0.05, &reference).unwrap();
            for c in &r.comparisons {
                // allow three Monte Carlo standard errors
                let tol = 3.0 * (c.p_unadjusted * (1.0 - c.p_unadjusted) / draws).sqrt() + 1.0 / draws;
                prop_assert!(c.p_adjusted + tol >= c.p_unadjusted, "{c:?}");
            }
            Ok(())
        })
        .unwrap();
}
