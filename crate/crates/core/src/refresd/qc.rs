use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnnotationRecord;
use crate::labels::SentenceClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QcConfig {
    /// Minimum share of duplicated items given the same class twice.
    pub min_duplicate_consistency: f64,
    /// Minimum share of reference items matching the reference class.
    pub min_reference_agreement: f64,
}

impl Default for QcConfig {
    fn default() -> Self {
        QcConfig {
            min_duplicate_consistency: 1.0,
            min_reference_agreement: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorQuality {
    pub annotator_id: String,
    pub duplicates_checked: usize,
    pub duplicate_consistency: Option<f64>,
    pub references_checked: usize,
    pub reference_agreement: Option<f64>,
    pub flagged: bool,
}

/// Per-annotator consistency on duplicated items and agreement with
/// reference classes. `duplicates` maps a duplicate item id to the pair it
/// copies; `references` maps pair ids to their reference class.
pub fn quality_report(
    records: &[AnnotationRecord],
    duplicates: &BTreeMap<String, String>,
    references: &BTreeMap<String, SentenceClass>,
    cfg: &QcConfig,
) -> Vec<AnnotatorQuality> {
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, SentenceClass>> = BTreeMap::new();
    for r in records {
        by_annotator
            .entry(&r.annotator_id)
            .or_default()
            .insert(&r.pair_id, r.sentence_class);
    }
    by_annotator
        .into_iter()
        .map(|(annotator, classes)| {
            let mut dup = (0usize, 0usize);
            for (copy, orig) in duplicates {
                if let (Some(a), Some(b)) = (classes.get(copy.as_str()), classes.get(orig.as_str())) {
                    dup.0 += 1;
                    dup.1 += (a == b) as usize;
                }
            }
            let mut refs = (0usize, 0usize);
            for (pair, gold) in references {
                if let Some(c) = classes.get(pair.as_str()) {
                    refs.0 += 1;
                    refs.1 += (c == gold) as usize;
                }
            }
            let ratio = |(n, k): (usize, usize)| (n > 0).then(|| k as f64 / n as f64);
            let duplicate_consistency = ratio(dup);
            let reference_agreement = ratio(refs);
            let flagged = duplicate_consistency.is_some_and(|v| v < cfg.min_duplicate_consistency)
                || reference_agreement.is_some_and(|v| v <= cfg.min_reference_agreement);
            AnnotatorQuality {
                annotator_id: annotator.to_string(),
                duplicates_checked: dup.0,
                duplicate_consistency,
                references_checked: refs.0,
                reference_agreement,
                flagged,
            }
        })
        .collect()
}
