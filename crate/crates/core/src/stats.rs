//! Sample statistics shared by the engine and the scaling analysis.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample standard deviation (`n - 1` denominator).
pub fn sample_std(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(samples);
    (samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Standard error of the mean, `std / sqrt(n)`.
pub fn sem(samples: &[f64]) -> f64 {
    sample_std(samples) / (samples.len() as f64).sqrt()
}

/// Population standard deviation of a set of estimates (bootstrap spread).
pub fn spread(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}
