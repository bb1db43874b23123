use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Cells with a larger censored fraction are left out of fits.
pub const MAX_CENSORED_FRACTION: f64 = 0.2;

/// Winners with a lower `R²` are reported as indeterminate.
pub const MIN_WINNING_R2: f64 = 0.5;

pub const INDETERMINATE: &str = "indeterminate";

/// The candidate growth laws, as functions of `q`.
pub const PREDICTORS: [(&str, fn(f64) -> f64); 4] = [
    ("(log q)^2", |q| q.ln().powi(2)),
    ("1/q", |q| 1.0 / q),
    ("(log q)^2/q", |q| q.ln().powi(2) / q),
    ("(log q)^4/q^2", |q| q.ln().powi(4) / (q * q)),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorFit {
    pub predictor: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub fits: Vec<PredictorFit>,
    /// Predictor with the largest `R²`, or `indeterminate`.
    pub winner: String,
    pub points: usize,
    /// `q` values dropped for censoring or a missing time.
    pub excluded: Vec<f64>,
}

impl FitReport {
    pub fn fit(&self, predictor: &str) -> Option<&PredictorFit> {
        self.fits.iter().find(|f| f.predictor == predictor)
    }

    pub fn r_squared(&self, predictor: &str) -> Option<f64> {
        self.fit(predictor).map(|f| f.r_squared)
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, R²)`. `R²` is 0
/// when `y` is constant or `x` carries no information.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    // relative to the scale of y, a residual this small is rounding noise
    let r2 = if syy <= 1e-24 * (1.0 + my * my) * n {
        0.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Fits `log(time)` against each predictor over `(q, time)` points.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<FitReport> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(q, t)| q > 0.0 && q < 1.0 && t.is_finite() && t > 0.0)
        .collect();
    let excluded = points
        .iter()
        .filter(|p| !usable.contains(p))
        .map(|p| p.0)
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints(usable.len()));
    }
    let y: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let fits: Vec<PredictorFit> = PREDICTORS
        .iter()
        .map(|(name, f)| {
            let x: Vec<f64> = usable.iter().map(|p| f(p.0)).collect();
            let (slope, intercept, r_squared) = least_squares(&x, &y);
            PredictorFit {
                predictor: name.to_string(),
                slope,
                intercept,
                r_squared,
            }
        })
        .collect();
    let best = fits
        .iter()
        .max_by(|a, b| a.r_squared.total_cmp(&b.r_squared))
        .expect("four predictors");
    let winner = if best.r_squared < MIN_WINNING_R2 {
        INDETERMINATE.to_string()
    } else {
        best.predictor.clone()
    };
    Ok(FitReport {
        fits,
        winner,
        points: usable.len(),
        excluded,
    })
}

/// A row of a sweep summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub q: f64,
    pub size: u32,
    pub time: Option<f64>,
    pub censored_fraction: f64,
    pub status: String,
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("q,") {
            continue;
        }
        let bad = || Error::Parse(format!("summary line {}: `{line}`", no + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let time: f64 = f[2].parse().map_err(|_| bad())?;
        rows.push(SummaryRow {
            q: f[0].parse().map_err(|_| bad())?,
            size: f[1].parse().map_err(|_| bad())?,
            time: time.is_finite().then_some(time),
            censored_fraction: f[3].parse().map_err(|_| bad())?,
            status: f[4].to_string(),
        });
    }
    Ok(rows)
}

/// Fits the rows of a summary table, leaving out failed cells and cells
/// with more than `max_censored` censored trials.
pub fn fit_summary(rows: &[SummaryRow], max_censored: f64) -> Result<FitReport> {
    let (keep, drop): (Vec<&SummaryRow>, Vec<&SummaryRow>) = rows
        .iter()
        .partition(|r| r.status == "ok" && r.time.is_some() && r.censored_fraction <= max_censored);
    let points: Vec<(f64, f64)> = keep.iter().map(|r| (r.q, r.time.unwrap())).collect();
    let mut report = fit_scaling(&points)?;
    report.excluded.extend(drop.iter().map(|r| r.q));
    Ok(report)
}

pub fn fit_summary_file(path: &Path, max_censored: f64) -> Result<FitReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    fit_summary(&parse_summary(&text)?, max_censored)
}
