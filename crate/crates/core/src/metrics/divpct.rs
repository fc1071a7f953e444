use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::labels::{PairLabels, SentenceClass, SentenceLabel};

/// Sentence-similarity cutoff for the threshold baseline.
pub const LASER_CUTOFF: f64 = 1.04;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivPctMode {
    /// DIV tokens over all tokens of both sides.
    #[default]
    Combined,
    /// Mean of the two per-side percentages.
    PerSideMean,
}

pub fn divpct(labels: &PairLabels, mode: DivPctMode) -> Result<f64, MetricsError> {
    match mode {
        DivPctMode::Combined => {
            if labels.is_empty() {
                return Err(MetricsError::Empty);
            }
            Ok(100.0 * labels.div_count() as f64 / labels.len() as f64)
        }
        DivPctMode::PerSideMean => {
            if labels.src.is_empty() || labels.tgt.is_empty() {
                return Err(MetricsError::Empty);
            }
            let pct = |v: &[crate::TokenLabel]| 100.0 * v.iter().filter(|l| l.is_div()).count() as f64 / v.len() as f64;
            Ok((pct(&labels.src) + pct(&labels.tgt)) / 2.0)
        }
    }
}

/// Unrelated when the DIV percentage is strictly above the threshold.
pub fn divpct_classify(labels: &PairLabels, threshold_pct: f64, mode: DivPctMode) -> Result<SentenceClass, MetricsError> {
    if !(threshold_pct > 0.0 && threshold_pct < 100.0) {
        return Err(MetricsError::Threshold(threshold_pct));
    }
    Ok(if divpct(labels, mode)? > threshold_pct {
        SentenceClass::Unrelated
    } else {
        SentenceClass::SomeMeaningDifference
    })
}

/// Equivalent when the score is strictly above the cutoff.
pub fn score_threshold_classify(score: f64, cutoff: f64) -> SentenceLabel {
    if score > cutoff {
        SentenceLabel::Equivalent
    } else {
        SentenceLabel::Divergent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TokenLabel::{Div, Eq};

    #[test]
    fn cutoff_boundary() {
        assert_eq!(score_threshold_classify(1.05, LASER_CUTOFF), SentenceLabel::Equivalent);
        assert_eq!(score_threshold_classify(1.04, LASER_CUTOFF), SentenceLabel::Divergent);
    }

    #[test]
    fn all_div_is_unrelated() {
        let l = PairLabels {
            src: vec![Div; 3],
            tgt: vec![Div; 2],
        };
        for t in [1.0, 50.0, 99.9] {
            assert_eq!(divpct_classify(&l, t, DivPctMode::Combined).unwrap(), SentenceClass::Unrelated);
        }
    }

    #[test]
    fn boundary_is_sd() {
        let l = PairLabels {
            src: vec![Div, Eq],
            tgt: vec![Eq, Eq, Eq],
        };
        assert_eq!(divpct(&l, DivPctMode::Combined).unwrap(), 20.0);
        assert_eq!(divpct(&l, DivPctMode::PerSideMean).unwrap(), 25.0);
        assert_eq!(divpct_classify(&l, 20.0, DivPctMode::Combined).unwrap(), SentenceClass::SomeMeaningDifference);
    }

    #[test]
    fn errors() {
        assert!(divpct_classify(&PairLabels::default(), 30.0, DivPctMode::Combined).is_err());
        let l = PairLabels::all_eq(2, 2);
        assert!(divpct_classify(&l, 0.0, DivPctMode::Combined).is_err());
        assert!(divpct_classify(&l, 100.0, DivPctMode::Combined).is_err());
    }
}
