//! Indicator normalization, Pearson correlation, and the correlation
//! transitivity bound.

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Min-max normalize `(country, value)` pairs onto [0, 1].
///
/// Normalization runs over exactly the countries present in the input, and
/// requires at least two distinct values.
pub fn normalize_indicator(
    values: &[(String, f64)],
) -> Result<Vec<(String, f64)>, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 2 values to normalize, got {}",
            values.len()
        )));
    }
    if values.iter().any(|(_, v)| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let min = values.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let max = values
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(StatsError::DegenerateRange);
    }
    Ok(values
        .iter()
        .map(|(c, v)| (c.clone(), (v - min) / (max - min)))
        .collect())
}

/// Sample Pearson correlation of two equal-length series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        covariance += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(StatsError::DegenerateVariance("x"));
    }
    if var_y == 0.0 {
        return Err(StatsError::DegenerateVariance("y"));
    }
    Ok(covariance / (var_x * var_y).sqrt())
}

/// Lower bound on Corr(Y, Z) given a = Corr(X, Y) and b = Corr(X, Z):
/// `a·b − √(1−a²)·√(1−b²)`.
pub fn transitivity_lower_bound(a: f64, b: f64) -> Result<f64, StatsError> {
    if !(a.is_finite() && b.is_finite() && a.abs() <= 1.0 && b.abs() <= 1.0) {
        return Err(StatsError::DomainError(format!(
            "correlations must lie in [-1,1], got a={a}, b={b}"
        )));
    }
    let slack_a = (1.0 - a * a).max(0.0).sqrt();
    let slack_b = (1.0 - b * b).max(0.0).sqrt();
    Ok(a * b - slack_a * slack_b)
}

/// Correlations between the ρ series and the two country indicators,
/// with the transitivity bound they force on Corr(EIS, CPI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Corr(ρ, EIS).
    pub a: f64,
    /// Corr(ρ, CPI).
    pub b: f64,
    /// Corr(EIS, CPI) computed from the same dataset.
    pub eis_cpi: f64,
    /// `a·b − √(1−a²)·√(1−b²)`; `eis_cpi` can never fall below this.
    pub transitivity_lower_bound: f64,
}

impl CorrelationReport {
    pub fn new(a: f64, b: f64, eis_cpi: f64) -> Result<Self, StatsError> {
        Ok(Self {
            a,
            b,
            eis_cpi,
            transitivity_lower_bound: transitivity_lower_bound(a, b)?,
        })
    }
}
