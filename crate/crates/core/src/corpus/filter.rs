use serde::{Deserialize, Serialize};

use super::SentencePair;

/// Curation thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Reject if the fraction of numeric tokens on either side exceeds this.
    pub max_numeric_ratio: f64,
    /// Reject near-copies whose normalized token edit distance is below this.
    pub min_edit_ratio: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 5,
            max_tokens: 80,
            max_numeric_ratio: 0.5,
            min_edit_ratio: 0.15,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_tokens < 1 {
            return Err("min_tokens must be at least 1".into());
        }
        if self.min_tokens > self.max_tokens {
            return Err("min_tokens exceeds max_tokens".into());
        }
        for (name, v) in [
            ("max_numeric_ratio", self.max_numeric_ratio),
            ("min_edit_ratio", self.min_edit_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Length,
    Numeric,
    Edit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub pair: SentencePair,
    /// Every rule that fired, in rule order.
    pub reasons: Vec<RejectReason>,
}

/// A token counts as numeric when it has a digit and nothing but digits and
/// number punctuation.
pub fn is_numeric_token(tok: &str) -> bool {
    tok.chars().any(|c| c.is_ascii_digit())
        && tok
            .chars()
            .all(|c| c.is_ascii_digit() || ".,:-+/%".contains(c))
}

fn numeric_ratio(tokens: &[String]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().filter(|t| is_numeric_token(t)).count() as f64 / tokens.len() as f64
}

/// Token-level Levenshtein distance divided by the longer side's length.
pub fn edit_ratio(a: &[String], b: &[String]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

fn reasons(pair: &SentencePair, cfg: &FilterConfig) -> Vec<RejectReason> {
    let mut out = Vec::new();
    let bad_len = |n: usize| n < cfg.min_tokens || n > cfg.max_tokens;
    if bad_len(pair.src_tokens.len()) || bad_len(pair.tgt_tokens.len()) {
        out.push(RejectReason::Length);
    }
    if numeric_ratio(&pair.src_tokens) > cfg.max_numeric_ratio
        || numeric_ratio(&pair.tgt_tokens) > cfg.max_numeric_ratio
    {
        out.push(RejectReason::Numeric);
    }
    if edit_ratio(&pair.src_tokens, &pair.tgt_tokens) < cfg.min_edit_ratio {
        out.push(RejectReason::Edit);
    }
    out
}

/// Splits pairs into kept and rejected under the three curation rules.
pub fn filter_corpus(pairs: Vec<SentencePair>, cfg: &FilterConfig) -> (Vec<SentencePair>, Vec<Rejected>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for pair in pairs {
        let r = reasons(&pair, cfg);
        if r.is_empty() {
            kept.push(pair);
        } else {
            rejected.push(Rejected { pair, reasons: r });
        }
    }
    (kept, rejected)
}
