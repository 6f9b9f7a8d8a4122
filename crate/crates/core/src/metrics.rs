//! Evaluation metrics. Percentiles use the nearest-rank method.

use thiserror::Error;

use crate::model::{ModelError, Schedule};

pub const PERCENTILE_METHOD: &str = "nearest-rank";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{weights} weights for {coflows} coflows")]
    LengthMismatch { weights: usize, coflows: usize },
    #[error("reference total must be positive, got {0}")]
    ZeroDenominator(f64),
    #[error("percentile of an empty list")]
    Empty,
    #[error("percentile must lie in (0, 100], got {0}")]
    BadPercentile(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn total_weighted_cct(schedule: &Schedule, weights: &[f64]) -> Result<f64, MetricsError> {
    if weights.len() != schedule.num_coflows() {
        return Err(MetricsError::LengthMismatch { weights: weights.len(), coflows: schedule.num_coflows() });
    }
    let t = schedule.completion_times()?;
    Ok(weights.iter().zip(&t).map(|(w, t)| w * t).sum())
}

/// Candidate total over the main algorithm's total.
pub fn norm_w(candidate: f64, ours: f64) -> Result<f64, MetricsError> {
    if !(ours > 0.0) {
        return Err(MetricsError::ZeroDenominator(ours));
    }
    Ok(candidate / ours)
}

/// Value at 1-based rank `ceil(p/100 * len)` of the sorted list.
pub fn tail_cct(ccts: &[f64], p: f64) -> Result<f64, MetricsError> {
    if ccts.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricsError::BadPercentile(p));
    }
    let mut sorted = ccts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}
