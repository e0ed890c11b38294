//! Naive persistence benchmark: tomorrow's mood equals today's.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::mood_class;

/// One persistence prediction paired with the observed value.
#[derive(Clone, Debug, PartialEq)]
pub struct NaivePrediction {
    pub user_id: String,
    pub target_date: NaiveDate,
    /// Mood of the immediately preceding retained day.
    pub predicted: f64,
    pub actual: f64,
}

/// n - 1 predictions for an n-day series; fewer than two days yield none.
pub fn predict_naive(user_id: &str, series: &[(NaiveDate, f64)]) -> Vec<NaivePrediction> {
    series
        .windows(2)
        .map(|pair| NaivePrediction {
            user_id: user_id.to_string(),
            target_date: pair[1].0,
            predicted: pair[0].1,
            actual: pair[1].1,
        })
        .collect()
}

/// Fraction of persistence predictions whose rounded class matches the
/// actual's rounded class, pooled over all users' series.
pub fn naive_class_accuracy(serieses: &[Vec<(NaiveDate, f64)>]) -> Result<f64> {
    let mut correct = 0u64;
    let mut total = 0u64;
    for series in serieses {
        for prediction in predict_naive("", series) {
            total += 1;
            if mood_class(prediction.predicted) == mood_class(prediction.actual) {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("no persistence predictions to score"));
    }
    Ok(correct as f64 / total as f64)
}
