//! Independent tail probabilities by numerical integration.
//!
//! With `t = sqrt(nu) * tan(theta)` the Student-t density becomes
//! proportional to `cos(theta)^(nu - 1)` on `[0, pi/2)`, so the two-sided
//! tail is a ratio of two definite integrals evaluated by Simpson's rule.

use std::f64::consts::FRAC_PI_2;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Two-sided `P(|T| >= |t|)` for `T ~ t(nu)`, `nu >= 1`.
pub fn t_two_sided(t: f64, nu: f64) -> f64 {
    assert!(nu >= 1.0);
    let theta0 = (t.abs() / nu.sqrt()).atan();
    let f = |th: f64| th.cos().powf(nu - 1.0);
    simpson(f, theta0, FRAC_PI_2, 200_000) / simpson(f, 0.0, FRAC_PI_2, 200_000)
}

/// Upper tail of `F(1, nu)` at `f`.
pub fn f1_upper(f: f64, nu: f64) -> f64 {
    t_two_sided(f.sqrt(), nu)
}
