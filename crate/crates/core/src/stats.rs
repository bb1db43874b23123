//! Small order statistics and interval helpers used by the estimators.

use std::cmp::Ordering;

/// Lower median of possibly censored observations. Censored values (`None`)
/// sort after every finite value; the result is `None` when the median
/// itself is censored. Empty input gives `None`.
pub fn censored_median<T: PartialOrd + Copy>(values: &[Option<T>]) -> Option<T> {
    censored_quantile(values, 0.5)
}

/// Nearest-rank quantile with censored values sorted last.
pub fn censored_quantile<T: PartialOrd + Copy>(values: &[Option<T>], p: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(censored_cmp);
    sorted[nearest_rank(sorted.len(), p)]
}

fn censored_cmp<T: PartialOrd>(a: &Option<T>, b: &Option<T>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Index of the nearest-rank `p`-quantile in a sorted sample of size `n`.
/// `p = 0.5` gives the lower median.
pub fn nearest_rank(n: usize, p: f64) -> usize {
    let rank = (p * n as f64).ceil() as usize;
    rank.clamp(1, n.max(1)) - 1
}

/// Mean and standard error of the mean.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
