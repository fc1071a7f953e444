use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{CorpusError, SentencePair};

/// Externally computed cross-lingual similarity for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub pair_id: String,
    pub score: f64,
}

/// Light normalization: NFC, ASCII replacements for typographic punctuation,
/// control characters dropped, whitespace runs squashed.
pub fn normalize_text(s: &str) -> String {
    let mapped: String = s
        .nfc()
        .filter(|c| !c.is_control() || c.is_whitespace())
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{00AB}' | '\u{00BB}' => '"',
            '\u{2010}'..='\u{2015}' | '\u{2212}' => '-',
            '\u{00A0}' | '\u{202F}' | '\u{2009}' => ' ',
            '\u{2026}' => '…',
            other => other,
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Reads `id \t src \t tgt` lines. Blank lines are skipped.
pub fn parse_parallel_tsv(text: &str) -> Result<Vec<SentencePair>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(CorpusError::parse(
                i + 1,
                format!("expected id, src and tgt columns, found {}", cols.len()),
            ));
        }
        out.push(SentencePair::from_raw(cols[0], cols[1], cols[2]));
    }
    Ok(out)
}

/// Pairs two line-aligned files; ids are 1-based line numbers.
pub fn read_parallel_files(src: &str, tgt: &str) -> Result<Vec<SentencePair>, CorpusError> {
    let s: Vec<&str> = src.lines().collect();
    let t: Vec<&str> = tgt.lines().collect();
    if s.len() != t.len() {
        return Err(CorpusError::LengthMismatch {
            src: s.len(),
            tgt: t.len(),
        });
    }
    Ok(s.iter()
        .zip(&t)
        .enumerate()
        .map(|(i, (a, b))| SentencePair::from_raw((i + 1).to_string(), a, b))
        .collect())
}

/// Reads a `pair_id \t score` file.
pub fn parse_score_tsv(text: &str) -> Result<Vec<SimilarityScore>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, score) = line
            .split_once('\t')
            .ok_or_else(|| CorpusError::parse(i + 1, "expected `pair_id<TAB>score`"))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| CorpusError::parse(i + 1, format!("bad score {score:?}")))?;
        if !score.is_finite() {
            return Err(CorpusError::parse(i + 1, "score is not finite"));
        }
        out.push(SimilarityScore {
            pair_id: id.to_string(),
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes() {
        assert_eq!(normalize_text("  l\u{2019}un   d\u{2019}eux\u{00A0}! "), "l'un d'eux !");
        assert_eq!(normalize_text("e\u{0301}t\u{00E9}"), "\u{00E9}t\u{00E9}");
        assert_eq!(normalize_text("a\u{0007}b"), "ab");
    }

    #[test]
    fn tsv_inputs() {
        let pairs = parse_parallel_tsv("x1\tthe dog\tle chien\n\n").unwrap();
        assert_eq!(pairs[0].tgt_tokens, vec!["le", "chien"]);
        assert!(parse_parallel_tsv("x1\tonly").is_err());

        let scores = parse_score_tsv("x1\t1.07\nx2\t0.9\n").unwrap();
        assert_eq!(scores[1].score, 0.9);
        assert!(parse_score_tsv("x1\tNaN").is_err());
        assert!(parse_score_tsv("x1 1.0").is_err());
    }

    #[test]
    fn aligned_files() {
        let p = read_parallel_files("a b\nc d\n", "e f\ng h\n").unwrap();
        assert_eq!(p[1].id, "2");
        assert!(read_parallel_files("a\nb", "c").is_err());
    }
}
