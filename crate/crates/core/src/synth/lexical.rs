use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{no_edit, DivergenceType, DivergentExample, Seed, SynthError};
use crate::corpus::SentencePair;
use crate::labels::{PairLabels, TokenLabel};

/// POS tags whose tokens may be substituted.
pub const CONTENT_POS: [&str; 3] = ["NOUN", "VERB", "ADJ"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Replace with a hypernym.
    Generalize,
    /// Replace with a hyponym.
    Particularize,
}

impl Direction {
    pub fn dtype(self) -> DivergenceType {
        match self {
            Direction::Generalize => DivergenceType::LexicalSubstitutionGeneralize,
            Direction::Particularize => DivergenceType::LexicalSubstitutionParticularize,
        }
    }
}

/// Source of hypernym/hyponym candidates.
pub trait LexicalSource: Send + Sync {
    fn candidates(&self, lemma: &str, pos: &str, direction: Direction) -> &[String];
}

#[derive(Debug, Clone, Default)]
struct Relations {
    hyper: Vec<String>,
    hypo: Vec<String>,
}

/// In-memory lexical resource keyed by (lemma, POS).
#[derive(Debug, Clone, Default)]
pub struct LexicalResource {
    entries: HashMap<(String, String), Relations>,
}

impl LexicalResource {
    /// Adds a candidate; empty strings, self-substitutions and duplicates are
    /// dropped.
    pub fn insert(&mut self, lemma: &str, pos: &str, direction: Direction, candidate: &str) {
        if candidate.is_empty() || candidate == lemma {
            return;
        }
        let rel = self.entries.entry((lemma.to_string(), pos.to_string())).or_default();
        let list = match direction {
            Direction::Generalize => &mut rel.hyper,
            Direction::Particularize => &mut rel.hypo,
        };
        if !list.iter().any(|c| c == candidate) {
            list.push(candidate.to_string());
        }
    }

    /// Reads `lemma \t pos \t hyper|hypo \t candidate` lines.
    pub fn from_tsv(text: &str) -> Result<Self, SynthError> {
        let mut res = LexicalResource::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| SynthError::Format { line: i + 1, msg };
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            }
            let direction = match cols[2] {
                "hyper" => Direction::Generalize,
                "hypo" => Direction::Particularize,
                other => return Err(err(format!("unknown relation {other:?}"))),
            };
            res.insert(cols[0], cols[1], direction, cols[3].trim());
        }
        Ok(res)
    }

    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<_> = self.entries.keys().collect();
        keys.sort();
        let mut out = String::new();
        for key in keys {
            let rel = &self.entries[key];
            for (name, list) in [("hyper", &rel.hyper), ("hypo", &rel.hypo)] {
                for c in list {
                    out.push_str(&format!("{}\t{}\t{name}\t{c}\n", key.0, key.1));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl LexicalSource for LexicalResource {
    fn candidates(&self, lemma: &str, pos: &str, direction: Direction) -> &[String] {
        match self.entries.get(&(lemma.to_string(), pos.to_string())) {
            Some(r) => match direction {
                Direction::Generalize => &r.hyper,
                Direction::Particularize => &r.hypo,
            },
            None => &[],
        }
    }
}

/// Scores a candidate word placed at `position` of a sentence.
pub trait LmScorer: Send + Sync {
    fn score_in_context(&self, tokens: &[String], position: usize, candidate: &str) -> f64;
}

/// Context-free fallback scorer: log of the add-one smoothed corpus count.
#[derive(Debug, Clone, Default)]
pub struct UnigramScorer {
    counts: HashMap<String, u64>,
}

impl UnigramScorer {
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut counts = HashMap::new();
        for s in sentences {
            for t in s {
                *counts.entry(t.to_lowercase()).or_insert(0) += 1;
            }
        }
        UnigramScorer { counts }
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(&word.to_lowercase()).copied().unwrap_or(0)
    }
}

impl LmScorer for UnigramScorer {
    fn score_in_context(&self, _tokens: &[String], _position: usize, candidate: &str) -> f64 {
        ((self.count(candidate) + 1) as f64).ln()
    }
}

fn match_case(template: &str, word: &str) -> String {
    let upper_initial = template.chars().next().is_some_and(char::is_uppercase);
    if !upper_initial {
        return word.to_string();
    }
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Source positions that carry at least one candidate in `direction`.
pub(crate) fn eligible_positions(seed: &Seed, resource: &dyn LexicalSource, direction: Direction) -> Vec<usize> {
    let upos = &seed.src_parse.tree.upos;
    (0..upos.len())
        .filter(|&i| CONTENT_POS.contains(&upos[i].as_str()))
        .filter(|&i| {
            let lemma = seed.src_parse.lemma(i);
            let form = seed.pair.src_tokens[i].to_lowercase();
            resource
                .candidates(&lemma, &upos[i], direction)
                .iter()
                .any(|c| *c != lemma && *c != form)
        })
        .collect()
}

/// Replaces a random content word with its best-scoring hypernym or hyponym.
pub fn lexical_substitution<R: Rng>(
    seed: &Seed,
    resource: &dyn LexicalSource,
    scorer: &dyn LmScorer,
    direction: Direction,
    rng: &mut R,
) -> Result<DivergentExample, SynthError> {
    let dtype = direction.dtype();
    let positions = eligible_positions(seed, resource, direction);
    if positions.is_empty() {
        return Err(no_edit(dtype, "no content word with lexical candidates"));
    }
    let pos = positions[rng.gen_range(0..positions.len())];
    let src = &seed.pair.src_tokens;
    let lemma = seed.src_parse.lemma(pos);
    let form = src[pos].to_lowercase();

    let mut best: Option<(&String, f64)> = None;
    for cand in resource.candidates(&lemma, &seed.src_parse.tree.upos[pos], direction) {
        if *cand == lemma || *cand == form {
            continue;
        }
        let s = scorer.score_in_context(src, pos, cand);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((cand, s));
        }
    }
    let (chosen, _) = best.expect("eligible position has a candidate");

    let mut new_src = src.clone();
    new_src[pos] = match_case(&src[pos], chosen);
    let aligned = seed.alignment.tgt_of(&[pos]);
    let labels = PairLabels {
        src: (0..src.len()).map(|i| TokenLabel::from_div(i == pos)).collect(),
        tgt: (0..seed.pair.tgt_tokens.len())
            .map(|t| TokenLabel::from_div(aligned.contains(&t)))
            .collect(),
    };
    let suffix = match direction {
        Direction::Generalize => "lg",
        Direction::Particularize => "lp",
    };
    Ok(DivergentExample {
        pair: SentencePair::from_tokens(
            format!("{}#{suffix}", seed.pair.id),
            new_src,
            seed.pair.tgt_tokens.clone(),
        ),
        dtype,
        labels,
        seed_id: seed.pair.id.clone(),
    })
}
