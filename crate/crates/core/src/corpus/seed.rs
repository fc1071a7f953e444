use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, SentencePair, SimilarityScore};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSplit {
    pub train: Vec<SentencePair>,
    pub dev: Vec<SentencePair>,
}

/// Keeps the `k` highest-scoring pairs and splits them into `k - dev_n`
/// training and `dev_n` development seeds. Ties in score are broken by
/// ascending id, so the output does not depend on input order.
pub fn select_seed(
    pairs: &[SentencePair],
    scores: &[SimilarityScore],
    k: usize,
    dev_n: usize,
    split_seed: u64,
) -> Result<SeedSplit, CorpusError> {
    if k > pairs.len() {
        return Err(CorpusError::Selection(format!(
            "k={k} exceeds corpus size {}",
            pairs.len()
        )));
    }
    if dev_n >= k && k > 0 {
        return Err(CorpusError::Selection(format!("dev_n={dev_n} must be below k={k}")));
    }
    let by_id: HashMap<&str, f64> = scores.iter().map(|s| (s.pair_id.as_str(), s.score)).collect();
    let missing: Vec<String> = pairs
        .iter()
        .filter(|p| !by_id.contains_key(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingScores(missing));
    }

    let mut ranked: Vec<(&SentencePair, f64)> = pairs.iter().map(|p| (p, by_id[p.id.as_str()])).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    ranked.truncate(k);

    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let mut dev_ranks = order[..dev_n].to_vec();
    let mut train_ranks = order[dev_n..].to_vec();
    dev_ranks.sort_unstable();
    train_ranks.sort_unstable();
    Ok(SeedSplit {
        train: train_ranks.into_iter().map(|r| ranked[r].0.clone()).collect(),
        dev: dev_ranks.into_iter().map(|r| ranked[r].0.clone()).collect(),
    })
}
