use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedPair, AnnotationRecord, Dataset, RefresdError, ANNOTATORS_PER_PAIR};
use crate::corpus::SentencePair;
use crate::labels::{SentenceClass, TokenLabel};
use crate::metrics::{SpanSet, Span, SpanLabel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Line {
    schema_version: u32,
    #[serde(flatten)]
    pair: AnnotatedPair,
}

/// Canonical JSONL: one pair per line, fields in a fixed order.
pub fn to_refresd_jsonl(ds: &Dataset) -> String {
    let mut out = String::new();
    for p in &ds.pairs {
        let line = Line {
            schema_version: SCHEMA_VERSION,
            pair: p.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("dataset serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_refresd_jsonl(text: &str) -> Result<Dataset, RefresdError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(raw).map_err(|e| RefresdError::Parse { line, msg: e.to_string() })?;
        if parsed.schema_version != SCHEMA_VERSION {
            return Err(RefresdError::Parse {
                line,
                msg: format!("unsupported schema_version {}", parsed.schema_version),
            });
        }
        parsed.pair.validate().map_err(|e| RefresdError::Parse { line, msg: e.to_string() })?;
        pairs.push(parsed.pair);
    }
    Ok(Dataset { pairs })
}

pub fn load_refresd(path: &Path) -> Result<Dataset, RefresdError> {
    let text = std::fs::read_to_string(path).map_err(|e| RefresdError::Io(format!("{}: {e}", path.display())))?;
    parse_refresd_jsonl(&text)
}

pub fn save_refresd(ds: &Dataset, path: &Path) -> Result<(), RefresdError> {
    std::fs::write(path, to_refresd_jsonl(ds)).map_err(|e| RefresdError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ImportReport {
    pub pairs: usize,
    pub excluded: usize,
    /// Pairs whose released label differs from the recomputed vote.
    pub label_mismatches: Vec<String>,
}

fn column(header: &[String], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(&h.as_str()))
}

fn parse_labels(field: &str) -> Option<Vec<SentenceClass>> {
    let parts: Vec<&str> = if field.contains([',', ';', '|']) {
        field.split([',', ';', '|']).collect()
    } else {
        field.split_whitespace().collect()
    };
    parts
        .into_iter()
        .map(|p| p.trim().trim_matches(|c| c == '[' || c == ']' || c == '\'' || c == '"'))
        .filter(|p| !p.is_empty())
        .map(SentenceClass::parse)
        .collect()
}

/// Per-token annotator counts from fractions in [0, 1] or raw counts.
fn parse_rationale(field: &str, tokens: usize) -> Result<Vec<usize>, String> {
    let vals: Vec<f64> = field
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim_matches(|c| c == '[' || c == ']').parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if vals.len() != tokens {
        return Err(format!("{} rationale values for {tokens} tokens", vals.len()));
    }
    let fractions = vals.iter().all(|v| *v <= 1.0);
    vals.into_iter()
        .map(|v| {
            let n = if fractions { (v * ANNOTATORS_PER_PAIR as f64).round() } else { v.round() };
            if !(0.0..=ANNOTATORS_PER_PAIR as f64).contains(&n) {
                Err(format!("rationale value {v} out of range"))
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

/// Spans of annotator `k` (0-based) when token coverage counts are known
/// but identities are not: annotator k covers every token with count > k.
fn nested_spans(counts: &[usize], k: usize) -> Vec<Span> {
    let labels: Vec<TokenLabel> = counts.iter().map(|&c| TokenLabel::from_div(c > k)).collect();
    SpanSet::from_labels(&labels, &[])
        .src
        .into_iter()
        .map(|s| Span::new(s.start, s.end, SpanLabel::Other))
        .collect()
}

/// Imports the released tab-separated format: a header naming
/// `sentence_en`, `sentence_fr`, `all_labels` (three classes), optionally
/// `label`, `id`, `rationale_en` and `rationale_fr` (per-token annotator
/// fractions). Annotator identities are not in the release, so each
/// token's coverage count is spread over annotators `a1..a3` in order.
pub fn import_refresd_tsv(text: &str) -> Result<(Dataset, ImportReport), RefresdError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(RefresdError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header: Vec<String> = head.split('\t').map(|h| h.trim().to_lowercase()).collect();
    let need = |names: &[&str]| {
        column(&header, names).ok_or_else(|| RefresdError::Parse {
            line: 1,
            msg: format!("missing column {}", names[0]),
        })
    };
    let c_en = need(&["sentence_en", "en", "english"])?;
    let c_fr = need(&["sentence_fr", "fr", "french"])?;
    let c_all = need(&["all_labels", "labels"])?;
    let c_label = column(&header, &["label", "gold_label"]);
    let c_id = column(&header, &["id", "pair_id"]);
    let c_ren = column(&header, &["rationale_en", "rationales_en"]);
    let c_rfr = column(&header, &["rationale_fr", "rationales_fr"]);

    let mut pairs = Vec::new();
    let mut report = ImportReport::default();
    for (i, raw) in lines {
        let line = i + 1;
        let err = |msg: String| RefresdError::Parse { line, msg };
        let cols: Vec<&str> = raw.split('\t').collect();
        let get = |c: usize| cols.get(c).copied().ok_or_else(|| err(format!("missing column {}", header[c])));
        let id = match c_id {
            Some(c) => get(c)?.trim().to_string(),
            None => format!("refresd{:05}", pairs.len()),
        };
        let pair = SentencePair::from_raw(id.clone(), get(c_en)?, get(c_fr)?);
        let classes = parse_labels(get(c_all)?).ok_or_else(|| err("unrecognized class label".into()))?;
        if classes.len() != ANNOTATORS_PER_PAIR {
            return Err(err(format!("expected {ANNOTATORS_PER_PAIR} labels, found {}", classes.len())));
        }
        let counts = |c: Option<usize>, n: usize| -> Result<Vec<usize>, RefresdError> {
            match c {
                Some(c) if !get(c)?.trim().is_empty() => parse_rationale(get(c)?, n).map_err(err),
                _ => Ok(vec![0; n]),
            }
        };
        let src_counts = counts(c_ren, pair.src_tokens.len())?;
        let tgt_counts = counts(c_rfr, pair.tgt_tokens.len())?;
        let records: Vec<AnnotationRecord> = classes
            .iter()
            .enumerate()
            .map(|(k, &cls)| AnnotationRecord {
                annotator_id: format!("a{}", k + 1),
                pair_id: id.clone(),
                spans: SpanSet::new(nested_spans(&src_counts, k), nested_spans(&tgt_counts, k)),
                sentence_class: cls,
                notes: None,
            })
            .collect();
        let ap = AnnotatedPair::new(pair, records).map_err(|e| err(e.to_string()))?;
        if let Some(c) = c_label {
            let released = SentenceClass::parse(get(c)?);
            if released.is_some() && released != ap.adjudicated {
                report.label_mismatches.push(id.clone());
            }
        }
        report.excluded += ap.excluded.is_some() as usize;
        pairs.push(ap);
    }
    report.pairs = pairs.len();
    Ok((Dataset { pairs }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::AggregationMode;

    #[test]
    fn empty_file() {
        assert!(parse_refresd_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn tsv_import() {
        let tsv = "id\tsentence_en\tsentence_fr\tlabel\tall_labels\trationale_en\trationale_fr\n\
                   p1\tthe red cat\tle chat\tsome_meaning_difference\tsome_meaning_difference,some_meaning_difference,no_meaning_difference\t0 0.67 0\t0 0.33\n\
                   p2\ta b\tc d\tunrelated\tunrelated,no_meaning_difference,unrelated\t1 1\t1 1\n";
        let (ds, rep) = import_refresd_tsv(tsv).unwrap();
        assert_eq!(rep.pairs, 2);
        assert_eq!(rep.excluded, 1);
        assert_eq!(rep.label_mismatches, vec!["p2".to_string()]);
        let p1 = &ds.pairs[0];
        assert_eq!(p1.adjudicated, Some(SentenceClass::SomeMeaningDifference));
        let pw = p1.gold_tokens(AggregationMode::PairwiseUnion).unwrap();
        assert_eq!(pw.src, vec![TokenLabel::Eq, TokenLabel::Div, TokenLabel::Eq]);
        let un = p1.gold_tokens(AggregationMode::Union).unwrap();
        assert_eq!(un.tgt, vec![TokenLabel::Eq, TokenLabel::Div]);
        let back = parse_refresd_jsonl(&to_refresd_jsonl(&ds)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn tsv_errors() {
        assert!(import_refresd_tsv("sentence_en\tsentence_fr\n").is_err());
        let bad = "sentence_en\tsentence_fr\tall_labels\trationale_en\na b\tc\tunrelated,unrelated,unrelated\t1\n";
        assert!(matches!(import_refresd_tsv(bad), Err(RefresdError::Parse { line: 2, .. })));
        assert!(import_refresd_tsv("sentence_en\tall_labels\n").is_err());
    }

    #[test]
    fn jsonl_errors() {
        let bad_version = r#"{"schema_version":9,"pair":{}}"#;
        assert!(matches!(parse_refresd_jsonl(bad_version), Err(RefresdError::Parse { line: 1, .. })));
    }
}
