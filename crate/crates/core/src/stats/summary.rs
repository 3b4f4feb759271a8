use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Normal-approximation interval `mean ± z·s/√n` with the sample standard
/// deviation.
pub fn mean_ci(values: &[f64], level: f64) -> Result<MeanCi, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    if values.len() < 2 {
        return Err(StatsError::TooFewSamples {
            got: values.len(),
            need: 2,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = z * var.sqrt() / n.sqrt();
    Ok(MeanCi {
        mean,
        lower: mean - half,
        upper: mean + half,
    })
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64, StatsError> {
    if predicted.len() != actual.len() {
        return Err(StatsError::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(StatsError::Empty);
    }
    let total: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum();
    Ok(total / predicted.len() as f64)
}
