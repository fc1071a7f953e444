//! Synthetic divergence generation.
//!
//! Seed equivalents are perturbed by three edit families of increasing
//! granularity: lexical substitution (one word), phrase replacement (a short
//! POS-matched span) and subtree deletion (up to half the sentence). Each
//! edit also yields EQ/DIV token labels by projecting the edited positions
//! through the word alignment. [`build_contrastive_set`] pairs the results
//! into ranked training items.

mod contrastive;
mod lexical;
mod phrase;
mod subtree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Alignment, ConlluSentence, SentencePair, Side};
use crate::labels::PairLabels;

pub use contrastive::{
    build_contrastive_set, read_items_jsonl, seed_rng, write_items_jsonl, ContrastiveItem, GenerationLog,
    Generators, Instance, RankEndpoint, RankRelation, SamplingStrategy, SkippedEdit, SynthConfig,
};
pub use lexical::{
    lexical_substitution, Direction, LexicalResource, LexicalSource, LmScorer, UnigramScorer, CONTENT_POS,
};
pub use phrase::{apply_replacement, phrase_replacement, DonorPool};
pub use subtree::{apply_subtree_deletion, eligible_subtrees, subtree_deletion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceType {
    SubtreeDeletion,
    PhraseReplacement,
    LexicalSubstitutionGeneralize,
    LexicalSubstitutionParticularize,
}

impl DivergenceType {
    pub const ALL: [DivergenceType; 4] = [
        DivergenceType::SubtreeDeletion,
        DivergenceType::PhraseReplacement,
        DivergenceType::LexicalSubstitutionGeneralize,
        DivergenceType::LexicalSubstitutionParticularize,
    ];

    pub fn granularity(self) -> Granularity {
        match self {
            DivergenceType::LexicalSubstitutionGeneralize | DivergenceType::LexicalSubstitutionParticularize => {
                Granularity::Lexical
            }
            DivergenceType::PhraseReplacement | DivergenceType::SubtreeDeletion => Granularity::Coarse,
        }
    }

    pub fn is_lexical(self) -> bool {
        self.granularity() == Granularity::Lexical
    }

    pub fn name(self) -> &'static str {
        match self {
            DivergenceType::SubtreeDeletion => "subtree_deletion",
            DivergenceType::PhraseReplacement => "phrase_replacement",
            DivergenceType::LexicalSubstitutionGeneralize => "lexical_substitution_generalize",
            DivergenceType::LexicalSubstitutionParticularize => "lexical_substitution_particularize",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// Coarseness of an edit; lower is finer-grained. Phrase replacement and
/// subtree deletion share a level and are never ranked against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Equivalent = 0,
    Lexical = 1,
    Coarse = 2,
}

/// A perturbed seed with its token labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergentExample {
    pub pair: SentencePair,
    pub dtype: DivergenceType,
    pub labels: PairLabels,
    pub seed_id: String,
}

/// A seed equivalent with the annotations the generators need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub pair: SentencePair,
    /// Parse of the source side; its forms must match `pair.src_tokens`.
    pub src_parse: ConlluSentence,
    /// Target-side POS tags, when a target parse is available.
    pub tgt_upos: Option<Vec<String>>,
    pub alignment: Alignment,
}

impl Seed {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.src_parse.forms.len() != self.pair.src_tokens.len() {
            return Err(SynthError::Invalid(format!(
                "seed {}: parse has {} tokens, pair has {}",
                self.pair.id,
                self.src_parse.forms.len(),
                self.pair.src_tokens.len()
            )));
        }
        if let Some(t) = &self.tgt_upos {
            if t.len() != self.pair.tgt_tokens.len() {
                return Err(SynthError::Invalid(format!(
                    "seed {}: {} target POS tags for {} tokens",
                    self.pair.id,
                    t.len(),
                    self.pair.tgt_tokens.len()
                )));
            }
        }
        self.alignment
            .validate(self.pair.src_tokens.len(), self.pair.tgt_tokens.len())
            .map_err(|e| SynthError::Invalid(format!("seed {}: {e}", self.pair.id)))
    }

    pub fn upos(&self, side: Side) -> Option<&[String]> {
        match side {
            Side::Src => Some(&self.src_parse.tree.upos),
            Side::Tgt => self.tgt_upos.as_deref(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("no eligible {dtype:?} edit: {reason}")]
    NoEligibleEdit { dtype: DivergenceType, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("jsonl line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub(crate) fn no_edit(dtype: DivergenceType, reason: impl Into<String>) -> SynthError {
    SynthError::NoEligibleEdit {
        dtype,
        reason: reason.into(),
    }
}

/// Owned donor pool, lexicon and LM behind a set of generators.
pub struct Resources {
    pub pool: DonorPool,
    pub lexicon: LexicalResource,
    pub lm: UnigramScorer,
    pub config: SynthConfig,
}

impl Resources {
    /// Donor pool and unigram LM from the seeds themselves.
    pub fn from_seeds(seeds: &[Seed], lexicon: LexicalResource, config: SynthConfig) -> Self {
        Resources {
            pool: DonorPool::from_seeds(seeds, config.max_ngram),
            lm: UnigramScorer::from_sentences(seeds.iter().map(|s| s.pair.src_tokens.as_slice())),
            lexicon,
            config,
        }
    }

    pub fn generators(&self) -> Generators<'_> {
        Generators {
            pool: &self.pool,
            lexicon: &self.lexicon,
            lm: &self.lm,
            config: self.config.clone(),
        }
    }
}
