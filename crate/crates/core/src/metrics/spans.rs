use std::fmt;

use serde::{Deserialize, Serialize};

use super::{f1, MetricsError};
use crate::corpus::Side;
use crate::labels::TokenLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanLabel {
    Added,
    Changed,
    Other,
}

impl fmt::Display for SpanLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpanLabel::Added => "added",
            SpanLabel::Changed => "changed",
            SpanLabel::Other => "other",
        })
    }
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: SpanLabel,
}

impl Span {
    pub fn new(start: usize, end: usize, label: SpanLabel) -> Self {
        Span { start, end, label }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One annotator's spans on both sides of a pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanSet {
    pub src: Vec<Span>,
    pub tgt: Vec<Span>,
}

impl SpanSet {
    pub fn new(src: Vec<Span>, tgt: Vec<Span>) -> Self {
        SpanSet { src, tgt }
    }

    pub fn side(&self, side: Side) -> &[Span] {
        match side {
            Side::Src => &self.src,
            Side::Tgt => &self.tgt,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty() && self.tgt.is_empty()
    }

    pub fn len(&self) -> usize {
        self.src.len() + self.tgt.len()
    }

    /// Checks bounds and non-overlap on each side.
    pub fn validate(&self, src_len: usize, tgt_len: usize) -> Result<(), MetricsError> {
        for (spans, len) in [(&self.src, src_len), (&self.tgt, tgt_len)] {
            for s in spans {
                if s.start >= s.end || s.end > len {
                    return Err(MetricsError::SpanBounds {
                        start: s.start,
                        end: s.end,
                        len,
                    });
                }
            }
            let mut sorted: Vec<&Span> = spans.iter().collect();
            sorted.sort();
            for w in sorted.windows(2) {
                if w[1].start < w[0].end {
                    return Err(MetricsError::SpanOverlap(w[0].start, w[0].end, w[1].start, w[1].end));
                }
            }
        }
        Ok(())
    }

    /// Token mask per side; tokens covered by any span are true.
    pub fn coverage(&self, src_len: usize, tgt_len: usize) -> Result<(Vec<bool>, Vec<bool>), MetricsError> {
        let mask = |spans: &[Span], len: usize| {
            let mut m = vec![false; len];
            for s in spans {
                if s.start >= s.end || s.end > len {
                    return Err(MetricsError::SpanBounds {
                        start: s.start,
                        end: s.end,
                        len,
                    });
                }
                m[s.start..s.end].iter_mut().for_each(|x| *x = true);
            }
            Ok(m)
        };
        Ok((mask(&self.src, src_len)?, mask(&self.tgt, tgt_len)?))
    }

    /// Maximal runs of DIV tokens as `Other` spans.
    pub fn from_labels(src: &[TokenLabel], tgt: &[TokenLabel]) -> Self {
        SpanSet {
            src: runs(src),
            tgt: runs(tgt),
        }
    }
}

fn runs(labels: &[TokenLabel]) -> Vec<Span> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, l) in labels.iter().enumerate() {
        match (l.is_div(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Span::new(s, i, SpanLabel::Other));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Span::new(s, labels.len(), SpanLabel::Other));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    Union,
    PairwiseUnion,
    Intersection,
}

impl AggregationMode {
    pub const ALL: [AggregationMode; 3] = [
        AggregationMode::Union,
        AggregationMode::PairwiseUnion,
        AggregationMode::Intersection,
    ];

    fn min_votes(self, annotators: usize) -> usize {
        match self {
            AggregationMode::Union => 1,
            AggregationMode::PairwiseUnion => 2.min(annotators),
            AggregationMode::Intersection => annotators,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AggregationMode::Union => "union",
            AggregationMode::PairwiseUnion => "pairwise_union",
            AggregationMode::Intersection => "intersection",
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Token gold from several annotators' rationales: a token is DIV when at
/// least the mode's number of annotators cover it.
pub fn aggregate_rationales(
    annotations: &[SpanSet],
    src_len: usize,
    tgt_len: usize,
    mode: AggregationMode,
) -> Result<crate::PairLabels, MetricsError> {
    if annotations.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut src_votes = vec![0usize; src_len];
    let mut tgt_votes = vec![0usize; tgt_len];
    for a in annotations {
        let (s, t) = a.coverage(src_len, tgt_len)?;
        for (v, c) in src_votes.iter_mut().zip(s) {
            *v += c as usize;
        }
        for (v, c) in tgt_votes.iter_mut().zip(t) {
            *v += c as usize;
        }
    }
    let need = mode.min_votes(annotations.len());
    let lab = |votes: Vec<usize>| votes.into_iter().map(|v| TokenLabel::from_div(v >= need)).collect();
    Ok(crate::PairLabels {
        src: lab(src_votes),
        tgt: lab(tgt_votes),
    })
}

/// Token-level intersection over union of two spans.
pub fn iou(a: &Span, b: &Span) -> f64 {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Number of predicted spans matched to a distinct reference span on the
/// same side with IoU strictly above the threshold.
pub fn span_matches(reference: &SpanSet, predicted: &SpanSet, iou_threshold: f64) -> usize {
    [Side::Src, Side::Tgt]
        .into_iter()
        .map(|side| greedy_matches(reference.side(side), predicted.side(side), iou_threshold))
        .sum()
}

fn greedy_matches(reference: &[Span], predicted: &[Span], threshold: f64) -> usize {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            let v = iou(p, r);
            if v > threshold {
                cands.push((v, i, j));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; predicted.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut matched = 0;
    for (_, i, j) in cands {
        if !pred_used[i] && !ref_used[j] {
            pred_used[i] = true;
            ref_used[j] = true;
            matched += 1;
        }
    }
    matched
}

/// Span F1 for one pair, both sides pooled. Two empty sets agree perfectly;
/// one empty set against a non-empty one scores 0.
pub fn span_macro_f1(reference: &SpanSet, predicted: &SpanSet, iou_threshold: f64) -> f64 {
    match (reference.is_empty(), predicted.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let m = span_matches(reference, predicted, iou_threshold) as f64;
    f1(m / predicted.len() as f64, m / reference.len() as f64)
}

/// DIV-class token F1 between two annotators' coverage masks, 1 when
/// neither highlights anything.
pub fn token_rationale_f1(
    reference: &SpanSet,
    predicted: &SpanSet,
    src_len: usize,
    tgt_len: usize,
) -> Result<f64, MetricsError> {
    let (rs, rt) = reference.coverage(src_len, tgt_len)?;
    let (ps, pt) = predicted.coverage(src_len, tgt_len)?;
    let r: Vec<bool> = rs.into_iter().chain(rt).collect();
    let p: Vec<bool> = ps.into_iter().chain(pt).collect();
    let tp = r.iter().zip(&p).filter(|(a, b)| **a && **b).count() as f64;
    let nr = r.iter().filter(|x| **x).count() as f64;
    let np = p.iter().filter(|x| **x).count() as f64;
    Ok(match (nr == 0.0, np == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => f1(tp / np, tp / nr),
    })
}
