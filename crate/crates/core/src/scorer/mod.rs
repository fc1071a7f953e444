//! Desk-scale divergence scorer: a sentence-pair score F(x) and per-token
//! EQ/DIV logits, trained from synthetic contrastive data.

mod checkpoint;
mod data;
mod gradcheck;
mod loss;
mod model;
mod train;
mod vocab;

use thiserror::Error;

pub use data::{build_ce_random_set, build_dev_set, median, DevGroup, DevScores, DevSet, LabeledPair};
pub use gradcheck::{grad_check, grad_check_with, GradCheckConfig, GradCheckReport};
pub use loss::{
    ce_loss, example_loss, margin_loss, margin_loss_batch, multitask_loss, ranked_example, softplus, token_ce,
    unit_labels, LossSpec, TrainExample,
};
pub use model::{
    sigmoid, word_labels, Activation, Dims, DivergenceModel, EncodedPair, Layout, Logits, Prediction, ScorerParams,
};
pub use train::{
    dev_bias, evaluate_dev, fit_bias, grid_search_margin, train, train_with_vocab, DevReport, EpochLog, GridPoint,
    Objective, StoppingMetric, TrainConfig, TrainData, TrainOutcome, MARGIN_GRID,
};
pub use vocab::{Encoded, Vocab, VocabSpec, WordPiece, UNK, UNK_ID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorerError {
    #[error("sentence side has no tokens")]
    EmptySide,
    #[error("token labels cover {got} tokens, expected {expected}")]
    LabelMismatch { expected: usize, got: usize },
    #[error("non-finite loss or gradient at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
}
