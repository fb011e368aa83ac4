//! Binary cross-entropy.

use crate::error::{Error, Result};
use crate::math;

/// Predictions are clamped into `[PROB_EPSILON, 1 - PROB_EPSILON]` before
/// any logarithm, so exact 0/1 probabilities stay finite.
pub const PROB_EPSILON: f64 = 1e-12;

/// Loss for a single sample: `-ln(p)` when the label is 1, `-ln(1 - p)`
/// when it is 0.
pub fn bce_per_class(prediction: f64, label: u8) -> Result<f64> {
    if label > 1 {
        return Err(Error::NonBinaryLabel(label as f64));
    }
    if !prediction.is_finite() {
        return Err(Error::NonFinite("bce prediction"));
    }
    let p = prediction.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
    Ok(if label == 1 {
        -math::ln(p)
    } else {
        -math::ln(1.0 - p)
    })
}

/// Mean binary cross-entropy over `n` samples:
/// `-(1/n) sum_i [y_i ln(p_i) + (1 - y_i) ln(1 - p_i)]`.
pub fn bce_loss(predictions: &[f64], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "prediction/label length mismatch: {} vs {}",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Empty {
            what: "bce_loss input",
        });
    }
    let mut sum = 0.0;
    for (&p, &y) in predictions.iter().zip(labels.iter()) {
        sum += bce_per_class(p, y)?;
    }
    Ok(sum / predictions.len() as f64)
}
