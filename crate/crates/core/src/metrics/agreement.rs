use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::spans::{span_macro_f1, token_rationale_f1, SpanSet};
use super::MetricsError;

/// Nominal Krippendorff's alpha over an item-by-rater table with missing
/// ratings as `None`.
pub fn krippendorff_alpha<L: Ord + Clone>(ratings: &[Vec<Option<L>>]) -> Result<f64, MetricsError> {
    if ratings.len() < 2 {
        return Err(MetricsError::Undefined("fewer than two items".into()));
    }
    let all: BTreeSet<&L> = ratings.iter().flatten().flatten().collect();
    if all.is_empty() {
        return Err(MetricsError::Undefined("no ratings".into()));
    }
    if all.len() == 1 {
        return Ok(1.0);
    }
    let index: BTreeMap<&L, usize> = all.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let k = index.len();
    let mut o = vec![vec![0.0f64; k]; k];
    for item in ratings {
        let vals: Vec<usize> = item.iter().flatten().map(|l| index[l]).collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        let mut counts = vec![0usize; k];
        for &v in &vals {
            counts[v] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[d]
                };
                o[c][d] += pairs as f64 * w;
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    if n == 0.0 {
        return Err(MetricsError::Undefined("no item has two ratings".into()));
    }
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += o[c][d];
                expected += n_c[c] * n_c[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(MetricsError::Undefined("zero expected disagreement".into()));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IaaLevel {
    Span,
    Token,
}

/// One pair's rationales from every annotator who labelled it.
#[derive(Debug, Clone, PartialEq)]
pub struct IaaItem {
    pub src_len: usize,
    pub tgt_len: usize,
    pub annotations: Vec<(String, SpanSet)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAgreement {
    pub reference: String,
    pub predicted: String,
    pub items: usize,
    pub mean_f1: f64,
}

/// Agreement in percent: mean and population standard deviation of the
/// per-annotator-pair averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IaaSummary {
    pub level: IaaLevel,
    pub mean: f64,
    pub stdev: f64,
    pub pairs: Vec<PairAgreement>,
}

/// Macro F1 over every ordered annotator pair, one annotator serving as
/// reference and the other as prediction.
pub fn pairwise_iaa(items: &[IaaItem], level: IaaLevel, iou_threshold: f64) -> Result<IaaSummary, MetricsError> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for item in items {
        for (i, (ra, rs)) in item.annotations.iter().enumerate() {
            for (j, (pa, ps)) in item.annotations.iter().enumerate() {
                if i == j {
                    continue;
                }
                let f = match level {
                    IaaLevel::Span => {
                        rs.validate(item.src_len, item.tgt_len)?;
                        span_macro_f1(rs, ps, iou_threshold)
                    }
                    IaaLevel::Token => token_rationale_f1(rs, ps, item.src_len, item.tgt_len)?,
                };
                groups.entry((ra.clone(), pa.clone())).or_default().push(f);
            }
        }
    }
    if groups.is_empty() {
        return Err(MetricsError::Undefined("no item has two annotators".into()));
    }
    let pairs: Vec<PairAgreement> = groups
        .into_iter()
        .map(|((reference, predicted), fs)| PairAgreement {
            reference,
            predicted,
            items: fs.len(),
            mean_f1: 100.0 * fs.iter().sum::<f64>() / fs.len() as f64,
        })
        .collect();
    let means: Vec<f64> = pairs.iter().map(|p| p.mean_f1).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / means.len() as f64;
    Ok(IaaSummary {
        level,
        mean,
        stdev: var.sqrt(),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Span, SpanLabel};

    #[test]
    fn perfect_agreement() {
        let r: Vec<Vec<Option<u8>>> = (0..10).map(|i| vec![Some(i % 3); 3]).collect();
        assert_eq!(krippendorff_alpha(&r).unwrap(), 1.0);
    }

    #[test]
    fn textbook_value() {
        // Krippendorff's worked nominal example (4 coders, 12 units, missing data)
        let t = |v: &[i32]| v.iter().map(|&x| if x == 0 { None } else { Some(x) }).collect::<Vec<_>>();
        let table = [
            [1, 1, 0, 1],
            [2, 2, 3, 2],
            [3, 3, 3, 3],
            [3, 3, 3, 3],
            [2, 2, 2, 2],
            [1, 2, 3, 4],
            [4, 4, 4, 4],
            [1, 1, 2, 1],
            [2, 2, 2, 2],
            [0, 5, 5, 5],
            [0, 0, 1, 1],
            [0, 0, 3, 0],
        ];
        let r: Vec<_> = table.iter().map(|row| t(row)).collect();
        let a = krippendorff_alpha(&r).unwrap();
        assert!((a - 0.743).abs() < 5e-4, "{a}");
    }

    #[test]
    fn degenerate() {
        let r = vec![vec![Some(1), None], vec![None, Some(2)]];
        assert!(krippendorff_alpha(&r).is_err());
        assert!(krippendorff_alpha(&[vec![Some(1), Some(2)]]).is_err());
    }

    #[test]
    fn identical_annotators() {
        let set = SpanSet::new(vec![Span::new(0, 2, SpanLabel::Added)], vec![]);
        let items: Vec<IaaItem> = (0..4)
            .map(|_| IaaItem {
                src_len: 5,
                tgt_len: 5,
                annotations: ["a", "b", "c"].iter().map(|n| (n.to_string(), set.clone())).collect(),
            })
            .collect();
        for level in [IaaLevel::Span, IaaLevel::Token] {
            let s = pairwise_iaa(&items, level, 0.5).unwrap();
            assert_eq!((s.mean, s.stdev, s.pairs.len()), (100.0, 0.0, 6));
        }
    }
}
