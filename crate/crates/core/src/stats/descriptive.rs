use super::StatsError;

/// Mean and standard error of the mean (sample standard deviation with an
/// `n - 1` denominator, divided by `sqrt(n)`).
pub fn mean_sem(values: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewValues { need: 2, got: n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("values".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    if values.windows(2).all(|w| w[0] == w[1]) {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    Ok((mean, (var / nf).sqrt()))
}
