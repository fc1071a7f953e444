//! Corpus inputs: parallel text, dependency parses, word alignments and
//! external similarity scores, plus curation filters and seed selection.

mod conllu;
mod filter;
mod pharaoh;
mod seed;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conllu::{parse_conllu, write_conllu, ConlluSentence, DependencyTree};
pub use filter::{edit_ratio, filter_corpus, is_numeric_token, FilterConfig, Rejected, RejectReason};
pub use pharaoh::{parse_pharaoh, parse_pharaoh_file, Alignment};
pub use seed::{select_seed, SeedSplit};
pub use text::{normalize_text, parse_parallel_tsv, parse_score_tsv, read_parallel_files, SimilarityScore};

/// An English/French sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    pub src_raw: String,
    pub tgt_raw: String,
}

impl SentencePair {
    /// Builds a pair from whitespace-tokenized text.
    pub fn from_raw(id: impl Into<String>, src: &str, tgt: &str) -> Self {
        SentencePair {
            id: id.into(),
            src_tokens: src.split_whitespace().map(str::to_string).collect(),
            tgt_tokens: tgt.split_whitespace().map(str::to_string).collect(),
            src_raw: src.to_string(),
            tgt_raw: tgt.to_string(),
        }
    }

    /// Builds a pair from token lists; raw strings are the space-joined tokens.
    pub fn from_tokens(id: impl Into<String>, src: Vec<String>, tgt: Vec<String>) -> Self {
        SentencePair {
            id: id.into(),
            src_raw: src.join(" "),
            tgt_raw: tgt.join(" "),
            src_tokens: src,
            tgt_tokens: tgt,
        }
    }

    pub fn tokens(&self, side: Side) -> &[String] {
        match side {
            Side::Src => &self.src_tokens,
            Side::Tgt => &self.tgt_tokens,
        }
    }
}

/// Which half of a sentence pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Src => Side::Tgt,
            Side::Tgt => Side::Src,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("alignment link {src}-{tgt} out of bounds for pair of {src_len}x{tgt_len} tokens")]
    AlignmentBounds {
        src: usize,
        tgt: usize,
        src_len: usize,
        tgt_len: usize,
    },
    #[error("missing similarity score for pair ids: {0:?}")]
    MissingScores(Vec<String>),
    #[error("invalid seed selection: {0}")]
    Selection(String),
    #[error("parallel files differ in length: {src} vs {tgt} lines")]
    LengthMismatch { src: usize, tgt: usize },
}

impl CorpusError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        CorpusError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
