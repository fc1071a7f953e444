//! Model evaluation against a rationale-annotated dataset: sentence-level
//! classification, token tagging under each rationale aggregation, and
//! DIV%-based separation of fine-grained from unrelated pairs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{SentenceClass, SentenceLabel, TokenLabel};
use crate::metrics::{
    classification_report_with_labels, divpct, divpct_classify, histogram, score_threshold_classify, token_f1,
    AggregationMode, ClassificationReport, DivPctMode, Histogram, MetricsError, TokenF1, LASER_CUTOFF,
};
use crate::refresd::{dataset_agreement, AgreementReport, Dataset};
use crate::scorer::{DivergenceModel, Prediction, ScorerError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("no adjudicated pairs to evaluate")]
    Empty,
    #[error("missing baseline score for pair {0}")]
    MissingScore(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub threshold: f64,
    pub divpct_thresholds: Vec<f64>,
    pub divpct_mode: DivPctMode,
    pub baseline_cutoff: f64,
    pub histogram_bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.5,
            divpct_thresholds: vec![10.0, 20.0, 30.0, 40.0],
            divpct_mode: DivPctMode::Combined,
            baseline_cutoff: LASER_CUTOFF,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenRow {
    pub aggregation: AggregationMode,
    pub scores: TokenF1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineGrainedRow {
    pub threshold: f64,
    /// Pairs that are gold divergent and predicted divergent.
    pub evaluated: usize,
    pub report: Option<ClassificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub pairs: usize,
    pub sentence: ClassificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<ClassificationReport>,
    pub token: Vec<TokenRow>,
    pub fine_grained: Vec<FineGrainedRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
}

/// Per-pair model output kept for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub gold: SentenceClass,
    pub prediction: Prediction,
    pub divpct: f64,
}

pub struct Evaluation {
    pub report: EvalReport,
    pub outcomes: Vec<PairOutcome>,
}

const BINARY: [SentenceLabel; 2] = [SentenceLabel::Equivalent, SentenceLabel::Divergent];

/// Runs the model over every adjudicated pair. `baseline_scores` maps pair
/// ids to an external similarity score thresholded at the configured cutoff.
pub fn evaluate(
    model: &dyn DivergenceModel,
    ds: &Dataset,
    baseline_scores: Option<&HashMap<String, f64>>,
    cfg: &EvalConfig,
) -> Result<Evaluation, EvalError> {
    let usable: Vec<_> = ds.usable().collect();
    if usable.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut outcomes = Vec::with_capacity(usable.len());
    for (ap, gold) in &usable {
        let prediction = model.predict(&ap.pair, cfg.threshold)?;
        let pct = divpct(&prediction.token_labels(), cfg.divpct_mode)?;
        outcomes.push(PairOutcome {
            pair_id: ap.pair.id.clone(),
            gold: *gold,
            prediction,
            divpct: pct,
        });
    }

    let gold_bin: Vec<SentenceLabel> = usable.iter().map(|(_, c)| c.binary()).collect();
    let pred_bin: Vec<SentenceLabel> = outcomes.iter().map(|o| o.prediction.sentence_label).collect();
    let sentence = classification_report_with_labels(&gold_bin, &pred_bin, &BINARY)?;

    let baseline = match baseline_scores {
        Some(scores) => {
            let pred = usable
                .iter()
                .map(|(ap, _)| {
                    scores
                        .get(&ap.pair.id)
                        .map(|s| score_threshold_classify(*s, cfg.baseline_cutoff))
                        .ok_or_else(|| EvalError::MissingScore(ap.pair.id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(classification_report_with_labels(&gold_bin, &pred, &BINARY)?)
        }
        None => None,
    };

    let mut token = Vec::new();
    for mode in AggregationMode::ALL {
        let mut gold_t: Vec<TokenLabel> = Vec::new();
        let mut pred_t: Vec<TokenLabel> = Vec::new();
        for ((ap, _), o) in usable.iter().zip(&outcomes) {
            let g = ap.gold_tokens(mode)?;
            gold_t.extend(g.src.iter().chain(&g.tgt));
            pred_t.extend(o.prediction.src_token_labels.iter().chain(&o.prediction.tgt_token_labels));
        }
        token.push(TokenRow {
            aggregation: mode,
            scores: token_f1(&gold_t, &pred_t)?,
        });
    }

    let mut fine_grained = Vec::new();
    let fine_labels = [SentenceClass::SomeMeaningDifference, SentenceClass::Unrelated];
    for &t in &cfg.divpct_thresholds {
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for o in &outcomes {
            if o.gold == SentenceClass::NoMeaningDifference || o.prediction.sentence_label != SentenceLabel::Divergent {
                continue;
            }
            gold.push(o.gold);
            pred.push(divpct_classify(&o.prediction.token_labels(), t, cfg.divpct_mode)?);
        }
        fine_grained.push(FineGrainedRow {
            threshold: t,
            evaluated: gold.len(),
            report: if gold.is_empty() {
                None
            } else {
                Some(classification_report_with_labels(&gold, &pred, &fine_labels)?)
            },
        });
    }

    let agreement = dataset_agreement(ds).ok();
    Ok(Evaluation {
        report: EvalReport {
            pairs: usable.len(),
            sentence,
            baseline,
            token,
            fine_grained,
            agreement,
        },
        outcomes,
    })
}

impl Evaluation {
    fn by_class(&self, f: impl Fn(&PairOutcome) -> f64) -> Vec<(String, Vec<f64>)> {
        SentenceClass::ALL
            .iter()
            .map(|c| {
                let v = self.outcomes.iter().filter(|o| o.gold == *c).map(&f).collect();
                (c.to_string(), v)
            })
            .collect()
    }

    pub fn score_histogram(&self, bins: usize) -> Histogram {
        histogram(&self.by_class(|o| o.prediction.score), bins)
    }

    pub fn divpct_histogram(&self, bins: usize) -> Histogram {
        histogram(&self.by_class(|o| o.divpct), bins)
    }

    /// Both histograms in one CSV with a leading `plot` column.
    pub fn plot_csv(&self, bins: usize) -> String {
        let mut out = String::from("plot,series,bin_lo,bin_hi,count\n");
        for (name, h) in [("score", self.score_histogram(bins)), ("divpct", self.divpct_histogram(bins))] {
            for line in h.to_csv().lines().skip(1) {
                out.push_str(name);
                out.push(',');
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}
