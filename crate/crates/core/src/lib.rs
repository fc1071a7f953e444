//! Cross-lingual semantic divergence toolkit: synthetic contrastive data,
//! a rank-trained divergence scorer, and rationale-aware evaluation.

pub mod corpus;
pub mod evaluate;
pub mod labels;
pub mod metrics;
pub mod refresd;
pub mod scorer;
pub mod synth;
pub mod toycorpus;

pub use labels::{PairLabels, SentenceClass, SentenceLabel, TokenLabel};
