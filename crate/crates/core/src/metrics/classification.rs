use std::collections::BTreeSet;
use std::fmt::Display;

use serde::Serialize;

use super::{f1, MetricsError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: usize,
    /// Set when some precision or recall had a zero denominator and was
    /// reported as 0.
    pub zero_division: bool,
}

impl ClassificationReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.label == label)
    }
}

/// Per-class and support-weighted precision/recall/F1 over the labels that
/// occur in either sequence.
pub fn classification_report<L: Ord + Clone + Display>(gold: &[L], pred: &[L]) -> Result<ClassificationReport, MetricsError> {
    let labels: BTreeSet<L> = gold.iter().chain(pred).cloned().collect();
    let labels: Vec<L> = labels.into_iter().collect();
    classification_report_with_labels(gold, pred, &labels)
}

/// Like [`classification_report`] but over a fixed label set, so absent
/// classes still get a row.
pub fn classification_report_with_labels<L: Ord + Clone + Display>(
    gold: &[L],
    pred: &[L],
    labels: &[L],
) -> Result<ClassificationReport, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = gold.len();
    let mut zero_division = false;
    let mut classes = Vec::with_capacity(labels.len());
    for label in labels {
        let tp = gold.iter().zip(pred).filter(|(g, p)| *g == label && *p == label).count();
        let predicted = pred.iter().filter(|p| *p == label).count();
        let support = gold.iter().filter(|g| *g == label).count();
        let precision = if predicted == 0 {
            zero_division = true;
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if support == 0 {
            zero_division = true;
            0.0
        } else {
            tp as f64 / support as f64
        };
        classes.push(ClassMetrics {
            label: label.to_string(),
            precision,
            recall,
            f1: f1(precision, recall),
            support,
        });
    }
    let weighted = |f: fn(&ClassMetrics) -> f64| classes.iter().map(|c| c.support as f64 / n as f64 * f(c)).sum::<f64>();
    Ok(ClassificationReport {
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        accuracy: gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / n as f64,
        total: n,
        zero_division,
        classes,
    })
}
