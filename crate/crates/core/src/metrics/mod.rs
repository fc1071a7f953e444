//! Evaluation metrics: classification reports, token F1 under rationale
//! aggregation, IoU span matching, inter-annotator agreement and the
//! threshold classifiers used as baselines.

mod agreement;
mod classification;
mod divpct;
mod plot;
mod spans;
mod token;

use thiserror::Error;

pub use agreement::{krippendorff_alpha, pairwise_iaa, IaaItem, IaaLevel, IaaSummary, PairAgreement};
pub use classification::{classification_report, classification_report_with_labels, ClassMetrics, ClassificationReport};
pub use divpct::{divpct, divpct_classify, score_threshold_classify, DivPctMode, LASER_CUTOFF};
pub use plot::{histogram, render_histogram_svg, Histogram};
pub use spans::{
    aggregate_rationales, iou, span_macro_f1, span_matches, token_rationale_f1, AggregationMode, Span, SpanLabel,
    SpanSet,
};
pub use token::{token_f1, TokenF1};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {gold} gold vs {pred} predicted")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("empty input")]
    Empty,
    #[error("span [{start}, {end}) out of bounds for {len} tokens")]
    SpanBounds { start: usize, end: usize, len: usize },
    #[error("overlapping spans [{0}, {1}) and [{2}, {3})")]
    SpanOverlap(usize, usize, usize, usize),
    #[error("undefined agreement: {0}")]
    Undefined(String),
    #[error("invalid threshold {0}")]
    Threshold(f64),
}

/// F1 from precision and recall, 0 when both are 0.
pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
