//! Small sample-statistics helpers for the Monte Carlo trend tests.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_var(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch statistic for H1: mean(a) < mean(b). Large negative values reject
/// the null; at 95% one-sided confidence the threshold is −1.645 (normal
/// approximation, appropriate for the ≥100-trial runs used here).
pub fn welch_z(a: &[f64], b: &[f64]) -> f64 {
    let se = (sample_var(a) / a.len() as f64 + sample_var(b) / b.len() as f64).sqrt();
    if se == 0.0 {
        return if mean(a) < mean(b) {
            f64::NEG_INFINITY
        } else if mean(a) > mean(b) {
            f64::INFINITY
        } else {
            0.0
        };
    }
    (mean(a) - mean(b)) / se
}

pub const ONE_SIDED_95: f64 = -1.645;
