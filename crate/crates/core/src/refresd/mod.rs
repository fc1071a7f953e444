//! Rationale-annotated sentence pairs: records, adjudication, storage,
//! statistics and annotator quality checks.

mod io;
mod qc;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentencePair;
use crate::labels::{PairLabels, SentenceClass};
use crate::metrics::{
    aggregate_rationales, krippendorff_alpha, pairwise_iaa, AggregationMode, IaaItem, IaaLevel, IaaSummary,
    MetricsError, SpanSet,
};

pub use io::{import_refresd_tsv, load_refresd, parse_refresd_jsonl, save_refresd, to_refresd_jsonl, ImportReport, SCHEMA_VERSION};
pub use qc::{quality_report, AnnotatorQuality, QcConfig};

pub const ANNOTATORS_PER_PAIR: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefresdError {
    #[error("expected {ANNOTATORS_PER_PAIR} records, found {0}")]
    RecordCount(usize),
    #[error("duplicate annotator {0}")]
    DuplicateAnnotator(String),
    #[error("record for pair {found} attached to pair {expected}")]
    PairMismatch { expected: String, found: String },
    #[error("invalid spans: {0}")]
    Spans(#[from] MetricsError),
    #[error("adjudicated class {stored} disagrees with majority vote {vote}")]
    Adjudication { stored: String, vote: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

/// One annotator's judgment of one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub pair_id: String,
    pub spans: SpanSet,
    pub sentence_class: SentenceClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl AnnotationRecord {
    pub fn validate(&self, pair: &SentencePair) -> Result<(), RefresdError> {
        if self.pair_id != pair.id {
            return Err(RefresdError::PairMismatch {
                expected: pair.id.clone(),
                found: self.pair_id.clone(),
            });
        }
        self.spans.validate(pair.src_tokens.len(), pair.tgt_tokens.len())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// All three annotators chose different classes.
    Tridisagreement,
    /// A 2-1 split between no meaning difference and unrelated.
    ExtremeBidisagreement,
}

impl std::fmt::Display for Exclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Exclusion::Tridisagreement => "tridisagreement",
            Exclusion::ExtremeBidisagreement => "extreme_bidisagreement",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Class(SentenceClass),
    Excluded(Exclusion),
}

/// Majority class of three judgments, with the exclusion rules applied.
pub fn majority_vote(classes: &[SentenceClass]) -> Result<Vote, RefresdError> {
    if classes.len() != ANNOTATORS_PER_PAIR {
        return Err(RefresdError::RecordCount(classes.len()));
    }
    let distinct: BTreeSet<SentenceClass> = classes.iter().copied().collect();
    Ok(match distinct.len() {
        1 => Vote::Class(classes[0]),
        2 => {
            if distinct.contains(&SentenceClass::NoMeaningDifference) && distinct.contains(&SentenceClass::Unrelated) {
                Vote::Excluded(Exclusion::ExtremeBidisagreement)
            } else {
                let first = classes[0];
                let n = classes.iter().filter(|c| **c == first).count();
                Vote::Class(if n >= 2 {
                    first
                } else {
                    *distinct.iter().find(|c| **c != first).unwrap()
                })
            }
        }
        _ => Vote::Excluded(Exclusion::Tridisagreement),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub pair: SentencePair,
    pub records: Vec<AnnotationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjudicated: Option<SentenceClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<Exclusion>,
}

impl AnnotatedPair {
    /// Validates the records and adjudicates by majority vote.
    pub fn new(pair: SentencePair, records: Vec<AnnotationRecord>) -> Result<Self, RefresdError> {
        let mut ap = AnnotatedPair {
            pair,
            records,
            adjudicated: None,
            excluded: None,
        };
        match ap.vote()? {
            Vote::Class(c) => ap.adjudicated = Some(c),
            Vote::Excluded(e) => ap.excluded = Some(e),
        }
        ap.validate()?;
        Ok(ap)
    }

    pub fn vote(&self) -> Result<Vote, RefresdError> {
        let classes: Vec<SentenceClass> = self.records.iter().map(|r| r.sentence_class).collect();
        majority_vote(&classes)
    }

    pub fn validate(&self) -> Result<(), RefresdError> {
        if self.records.len() != ANNOTATORS_PER_PAIR {
            return Err(RefresdError::RecordCount(self.records.len()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.records {
            if !seen.insert(&r.annotator_id) {
                return Err(RefresdError::DuplicateAnnotator(r.annotator_id.clone()));
            }
            r.validate(&self.pair)?;
        }
        let vote = self.vote()?;
        let stored = match (self.adjudicated, self.excluded) {
            (Some(c), None) => Vote::Class(c),
            (None, Some(e)) => Vote::Excluded(e),
            _ => {
                return Err(RefresdError::Adjudication {
                    stored: "inconsistent".into(),
                    vote: format!("{vote:?}"),
                })
            }
        };
        if stored != vote {
            return Err(RefresdError::Adjudication {
                stored: format!("{stored:?}"),
                vote: format!("{vote:?}"),
            });
        }
        Ok(())
    }

    /// Token gold from the annotators' rationales.
    pub fn gold_tokens(&self, mode: AggregationMode) -> Result<PairLabels, MetricsError> {
        let spans: Vec<SpanSet> = self.records.iter().map(|r| r.spans.clone()).collect();
        aggregate_rationales(&spans, self.pair.src_tokens.len(), self.pair.tgt_tokens.len(), mode)
    }

    pub fn iaa_item(&self) -> IaaItem {
        IaaItem {
            src_len: self.pair.src_tokens.len(),
            tgt_len: self.pair.tgt_tokens.len(),
            annotations: self.records.iter().map(|r| (r.annotator_id.clone(), r.spans.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<AnnotatedPair>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Adjudicated pairs only; excluded pairs never reach evaluation.
    pub fn usable(&self) -> impl Iterator<Item = (&AnnotatedPair, SentenceClass)> {
        self.pairs.iter().filter_map(|p| p.adjudicated.map(|c| (p, c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub excluded: usize,
    pub no_meaning_difference: usize,
    pub some_meaning_difference: usize,
    pub unrelated: usize,
    /// Share of adjudicated pairs that are divergent, in percent.
    pub pct_divergent: f64,
    /// Share of adjudicated pairs with some meaning difference, in percent.
    pub pct_fine_grained: f64,
}

pub fn dataset_stats(ds: &Dataset) -> DatasetStats {
    let mut counts = [0usize; 3];
    for (_, c) in ds.usable() {
        counts[SentenceClass::ALL.iter().position(|x| *x == c).unwrap()] += 1;
    }
    let n: usize = counts.iter().sum();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    DatasetStats {
        total: ds.len(),
        excluded: ds.len() - n,
        no_meaning_difference: counts[0],
        some_meaning_difference: counts[1],
        unrelated: counts[2],
        pct_divergent: pct(counts[1] + counts[2]),
        pct_fine_grained: pct(counts[1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub krippendorff_alpha: f64,
    pub span: IaaSummary,
    pub token: IaaSummary,
}

/// Sentence-class alpha and rationale agreement over every pair.
pub fn dataset_agreement(ds: &Dataset) -> Result<AgreementReport, MetricsError> {
    let annotators: Vec<&String> = ds
        .pairs
        .iter()
        .flat_map(|p| p.records.iter().map(|r| &r.annotator_id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let table: Vec<Vec<Option<SentenceClass>>> = ds
        .pairs
        .iter()
        .map(|p| {
            annotators
                .iter()
                .map(|a| p.records.iter().find(|r| &&r.annotator_id == a).map(|r| r.sentence_class))
                .collect()
        })
        .collect();
    let items: Vec<IaaItem> = ds.pairs.iter().map(AnnotatedPair::iaa_item).collect();
    Ok(AgreementReport {
        krippendorff_alpha: krippendorff_alpha(&table)?,
        span: pairwise_iaa(&items, IaaLevel::Span, 0.5)?,
        token: pairwise_iaa(&items, IaaLevel::Token, 0.5)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Span, SpanLabel};
    use SentenceClass::{NoMeaningDifference as ND, SomeMeaningDifference as SD, Unrelated as UN};

    #[test]
    fn votes() {
        assert_eq!(majority_vote(&[SD, SD, UN]).unwrap(), Vote::Class(SD));
        assert_eq!(majority_vote(&[UN, SD, SD]).unwrap(), Vote::Class(SD));
        assert_eq!(majority_vote(&[ND, SD, UN]).unwrap(), Vote::Excluded(Exclusion::Tridisagreement));
        assert_eq!(majority_vote(&[ND, ND, UN]).unwrap(), Vote::Excluded(Exclusion::ExtremeBidisagreement));
        assert_eq!(majority_vote(&[ND, ND, ND]).unwrap(), Vote::Class(ND));
        assert!(majority_vote(&[ND, ND]).is_err());
    }

    pub(crate) fn record(a: &str, pair: &str, class: SentenceClass, spans: SpanSet) -> AnnotationRecord {
        AnnotationRecord {
            annotator_id: a.into(),
            pair_id: pair.into(),
            spans,
            sentence_class: class,
            notes: None,
        }
    }

    #[test]
    fn annotated_pair_checks() {
        let pair = SentencePair::from_raw("p1", "a b c", "x y");
        let s = SpanSet::new(vec![Span::new(0, 1, SpanLabel::Added)], vec![]);
        let recs = vec![
            record("a", "p1", SD, s.clone()),
            record("b", "p1", SD, SpanSet::default()),
            record("c", "p1", ND, SpanSet::default()),
        ];
        let ap = AnnotatedPair::new(pair.clone(), recs.clone()).unwrap();
        assert_eq!(ap.adjudicated, Some(SD));
        let mut dup = recs.clone();
        dup[1].annotator_id = "a".into();
        assert!(matches!(AnnotatedPair::new(pair.clone(), dup), Err(RefresdError::DuplicateAnnotator(_))));
        let mut oob = recs.clone();
        oob[0].spans.tgt.push(Span::new(1, 3, SpanLabel::Other));
        assert!(AnnotatedPair::new(pair.clone(), oob).is_err());
        let mut wrong = ap.clone();
        wrong.adjudicated = Some(UN);
        assert!(wrong.validate().is_err());
    }

    #[test]
    fn stats_tally() {
        let pair = |id: &str| SentencePair::from_raw(id, "a", "b");
        let mk = |id: &str, c: [SentenceClass; 3]| {
            AnnotatedPair::new(
                pair(id),
                ["a", "b", "c"].iter().zip(c).map(|(a, c)| record(a, id, c, SpanSet::default())).collect(),
            )
            .unwrap()
        };
        let ds = Dataset {
            pairs: vec![
                mk("1", [ND, ND, ND]),
                mk("2", [SD, SD, ND]),
                mk("3", [UN, UN, SD]),
                mk("4", [ND, SD, UN]),
                mk("5", [SD, SD, SD]),
            ],
        };
        let s = dataset_stats(&ds);
        assert_eq!((s.total, s.excluded), (5, 1));
        assert_eq!((s.no_meaning_difference, s.some_meaning_difference, s.unrelated), (1, 2, 1));
        assert_eq!((s.pct_divergent, s.pct_fine_grained), (75.0, 50.0));
        let agr = dataset_agreement(&ds).unwrap();
        assert_eq!(agr.span.mean, 100.0);
        assert!(agr.krippendorff_alpha < 1.0);
    }
}
