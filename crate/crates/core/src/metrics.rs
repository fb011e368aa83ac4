//! Binary classification metrics: confusion matrix, precision/recall/F1/
//! accuracy, ROC curve, and trapezoid AUC.
//!
//! The ROC sweep groups tied scores at a single threshold, which makes the
//! trapezoid AUC coincide with the tie-corrected Mann-Whitney U statistic.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_positives: usize,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    #[serde(rename = "tn")]
    pub true_negatives: usize,
    #[serde(rename = "fn")]
    pub false_negatives: usize,
    pub positive_class: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize, positive_class: usize) -> Self {
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
            positive_class,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Precision/recall/F1/accuracy plus the names of any metric whose
/// denominator was zero (those metrics report 0 by convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub degenerate: Vec<String>,
}

/// ROC sweep from threshold +inf down to -inf. `points[i]` is the
/// (false-positive rate, true-positive rate) reached when samples with
/// score >= `thresholds[i]` are called positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

/// Counts prediction outcomes against ground truth.
pub fn confusion(
    pred_labels: &[usize],
    true_labels: &[usize],
    positive_class: usize,
) -> Result<ConfusionMatrix> {
    if pred_labels.len() != true_labels.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "prediction/label length mismatch: {} vs {}",
            pred_labels.len(),
            true_labels.len()
        )));
    }
    for &l in pred_labels.iter().chain(true_labels.iter()) {
        if l > 1 {
            return Err(Error::NonBinaryLabel(l as f64));
        }
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0, positive_class);
    for (&p, &t) in pred_labels.iter().zip(true_labels.iter()) {
        match (p == positive_class, t == positive_class) {
            (true, true) => cm.true_positives += 1,
            (true, false) => cm.false_positives += 1,
            (false, false) => cm.true_negatives += 1,
            (false, true) => cm.false_negatives += 1,
        }
    }
    Ok(cm)
}

/// Precision, recall, F1, and accuracy from a confusion matrix.
/// Zero denominators yield 0 and are flagged rather than NaN.
pub fn prf1_accuracy(cm: &ConfusionMatrix) -> Prf1 {
    let tp = cm.true_positives as f64;
    let fp = cm.false_positives as f64;
    let fn_ = cm.false_negatives as f64;
    let mut degenerate = Vec::new();

    let mut ratio = |num: f64, den: f64, name: &str| -> f64 {
        if den == 0.0 {
            degenerate.push(String::from(name));
            0.0
        } else {
            num / den
        }
    };

    let precision = ratio(tp, tp + fp, "precision");
    let recall = ratio(tp, tp + fn_, "recall");
    let f1 = ratio(2.0 * precision * recall, precision + recall, "f1");
    let accuracy = ratio(
        (cm.true_positives + cm.true_negatives) as f64,
        cm.total() as f64,
        "accuracy",
    );
    Prf1 {
        precision,
        recall,
        f1,
        accuracy,
        degenerate,
    }
}

/// ROC curve and trapezoid AUC for positive-class scores against binary
/// labels (1 = positive). Requires at least one sample of each class.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<(RocCurve, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "score/label length mismatch: {} vs {}",
            scores.len(),
            labels.len()
        )));
    }
    for &l in labels {
        if l > 1 {
            return Err(Error::NonBinaryLabel(l as f64));
        }
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("roc scores"));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidArgument(String::from(
            "ROC needs at least one positive and one negative label",
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&i, &j| scores[j].total_cmp(&scores[i]));

    let mut points = Vec::with_capacity(scores.len() + 2);
    let mut thresholds = Vec::with_capacity(scores.len() + 2);
    points.push((0.0, 0.0));
    thresholds.push(f64::INFINITY);

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group at this threshold.
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(threshold);
    }
    points.push((1.0, 1.0));
    thresholds.push(f64::NEG_INFINITY);

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) * 0.5;
    }
    Ok((RocCurve { points, thresholds }, auc))
}
