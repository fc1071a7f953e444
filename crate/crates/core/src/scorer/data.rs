use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::DivergenceModel;
use super::ScorerError;
use crate::corpus::SentencePair;
use crate::labels::SentenceLabel;
use crate::synth::{seed_rng, DivergenceType, DivergentExample, GenerationLog, Generators, Seed, SkippedEdit};

/// A held-out equivalent together with every divergent generated from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevGroup {
    pub equivalent: SentencePair,
    pub divergents: Vec<DivergentExample>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DevSet {
    pub groups: Vec<DevGroup>,
}

/// A sentence pair with a binary gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub pair: SentencePair,
    pub label: SentenceLabel,
}

/// Runs every generator on every dev seed. Groups without any divergent
/// are dropped.
pub fn build_dev_set(seeds: &[Seed], gens: &Generators<'_>, rng_seed: u64) -> (DevSet, GenerationLog) {
    let mut log = GenerationLog::default();
    let mut groups = Vec::new();
    for seed in seeds {
        let mut divergents = Vec::new();
        for t in DivergenceType::ALL {
            match gens.generate(seed, t, rng_seed) {
                Ok(ex) => divergents.push(ex),
                Err(e) => log.skipped.push(SkippedEdit {
                    seed_id: seed.pair.id.clone(),
                    dtype: Some(t),
                    reason: e.to_string(),
                }),
            }
        }
        if !divergents.is_empty() {
            groups.push(DevGroup {
                equivalent: seed.pair.clone(),
                divergents,
            });
        }
    }
    (DevSet { groups }, log)
}

impl DevSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Balanced binary set: each equivalent plus one of its divergents,
    /// cycling through the divergence types by group index.
    pub fn balanced(&self) -> Vec<LabeledPair> {
        let mut out = Vec::with_capacity(2 * self.groups.len());
        for (i, g) in self.groups.iter().enumerate() {
            out.push(LabeledPair {
                pair: g.equivalent.clone(),
                label: SentenceLabel::Equivalent,
            });
            let want = DivergenceType::ALL[i % DivergenceType::ALL.len()];
            let div = g.divergents.iter().find(|d| d.dtype == want).unwrap_or(&g.divergents[0]);
            out.push(LabeledPair {
                pair: div.pair.clone(),
                label: SentenceLabel::Divergent,
            });
        }
        out
    }

    /// Equivalent scores and per-type divergent scores, group by group.
    pub fn scores(&self, model: &dyn DivergenceModel) -> Result<DevScores, ScorerError> {
        let mut out = DevScores::default();
        for g in &self.groups {
            let e = model.score(&g.equivalent)?;
            out.equivalent.push(e);
            let mut divs = Vec::new();
            for d in &g.divergents {
                divs.push((d.dtype, model.score(&d.pair)?));
            }
            out.divergent.push(divs);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DevScores {
    pub equivalent: Vec<f64>,
    pub divergent: Vec<Vec<(DivergenceType, f64)>>,
}

impl DevScores {
    /// Share of (equivalent, divergent) comparisons within a group where the
    /// equivalent scores strictly higher.
    pub fn ranking_accuracy(&self) -> f64 {
        let mut total = 0usize;
        let mut right = 0usize;
        for (e, divs) in self.equivalent.iter().zip(&self.divergent) {
            for (_, s) in divs {
                total += 1;
                right += (e > s) as usize;
            }
        }
        if total == 0 {
            0.0
        } else {
            right as f64 / total as f64
        }
    }

    pub fn of_type(&self, t: DivergenceType) -> Vec<f64> {
        self.divergent.iter().flatten().filter(|(d, _)| *d == t).map(|(_, s)| *s).collect()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// One labelled example per seed: a fair coin picks the equivalent or a
/// divergent of a uniformly drawn type.
pub fn build_ce_random_set(seeds: &[Seed], gens: &Generators<'_>, rng_seed: u64) -> (Vec<LabeledPair>, GenerationLog) {
    let mut out = Vec::with_capacity(seeds.len());
    let mut log = GenerationLog::default();
    for seed in seeds {
        let mut rng = seed_rng(rng_seed, &seed.pair.id, 0);
        if rng.gen_bool(0.5) {
            out.push(LabeledPair {
                pair: seed.pair.clone(),
                label: SentenceLabel::Equivalent,
            });
            continue;
        }
        let first = rng.gen_range(0..DivergenceType::ALL.len());
        let mut done = false;
        for k in 0..DivergenceType::ALL.len() {
            let t = DivergenceType::ALL[(first + k) % DivergenceType::ALL.len()];
            match gens.generate(seed, t, rng_seed) {
                Ok(ex) => {
                    out.push(LabeledPair {
                        pair: ex.pair,
                        label: SentenceLabel::Divergent,
                    });
                    done = true;
                    break;
                }
                Err(e) => log.skipped.push(SkippedEdit {
                    seed_id: seed.pair.id.clone(),
                    dtype: Some(t),
                    reason: e.to_string(),
                }),
            }
        }
        if !done {
            log.skipped.push(SkippedEdit {
                seed_id: seed.pair.id.clone(),
                dtype: None,
                reason: "no divergent could be generated".into(),
            });
        }
    }
    (out, log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn ranking() {
        let s = DevScores {
            equivalent: vec![1.0, 0.0],
            divergent: vec![
                vec![(DivergenceType::SubtreeDeletion, 0.5), (DivergenceType::PhraseReplacement, 2.0)],
                vec![(DivergenceType::SubtreeDeletion, 0.0)],
            ],
        };
        assert!((s.ranking_accuracy() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.of_type(DivergenceType::SubtreeDeletion), vec![0.5, 0.0]);
    }
}
