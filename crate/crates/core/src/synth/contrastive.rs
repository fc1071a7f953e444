use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexical::{lexical_substitution, Direction, LexicalSource, LmScorer};
use super::phrase::{phrase_replacement, DonorPool};
use super::subtree::subtree_deletion;
use super::{DivergenceType, DivergentExample, Granularity, Seed, SynthError};
use crate::corpus::{SentencePair, Side};
use crate::labels::PairLabels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    SingleType(DivergenceType),
    Balanced,
    Concatenation,
    DivergenceRanking,
}

impl FromStr for SamplingStrategy {
    type Err = String;

    /// Accepts `balanced`, `concatenation`, `divergence-ranking`, or a
    /// divergence type name (e.g. `subtree_deletion`) for a single type.
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.replace('-', "_");
        match norm.as_str() {
            "balanced" => Ok(SamplingStrategy::Balanced),
            "concatenation" => Ok(SamplingStrategy::Concatenation),
            "divergence_ranking" => Ok(SamplingStrategy::DivergenceRanking),
            other => DivergenceType::parse(other)
                .map(SamplingStrategy::SingleType)
                .ok_or_else(|| format!("unknown sampling strategy {s:?}")),
        }
    }
}

/// One side of a ranked pair in the divergence-ranking layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RankEndpoint {
    Equivalent,
    /// Either lexical substitution direction, picked at random per seed.
    AnyLexical,
    Type(DivergenceType),
}

impl RankEndpoint {
    pub fn granularity(self) -> Granularity {
        match self {
            RankEndpoint::Equivalent => Granularity::Equivalent,
            RankEndpoint::AnyLexical => Granularity::Lexical,
            RankEndpoint::Type(t) => t.granularity(),
        }
    }
}

impl fmt::Display for RankEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankEndpoint::Equivalent => f.write_str("equivalent"),
            RankEndpoint::AnyLexical => f.write_str("lexical_substitution"),
            RankEndpoint::Type(t) => f.write_str(t.name()),
        }
    }
}

impl TryFrom<String> for RankEndpoint {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "equivalent" => Ok(RankEndpoint::Equivalent),
            "lexical_substitution" => Ok(RankEndpoint::AnyLexical),
            other => DivergenceType::parse(other)
                .map(RankEndpoint::Type)
                .ok_or_else(|| format!("unknown rank endpoint {s:?}")),
        }
    }
}

impl From<RankEndpoint> for String {
    fn from(e: RankEndpoint) -> String {
        e.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub phrase_max_tries: usize,
    /// Longest POS n-gram indexed for phrase donors.
    pub max_ngram: usize,
    /// (finer, coarser) pairs emitted per seed under divergence ranking.
    pub ranking_pairs: Vec<(RankEndpoint, RankEndpoint)>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        use DivergenceType::*;
        SynthConfig {
            phrase_max_tries: 50,
            max_ngram: 10,
            ranking_pairs: vec![
                (RankEndpoint::Equivalent, RankEndpoint::Type(LexicalSubstitutionGeneralize)),
                (RankEndpoint::Equivalent, RankEndpoint::Type(LexicalSubstitutionParticularize)),
                (RankEndpoint::AnyLexical, RankEndpoint::Type(PhraseReplacement)),
                (RankEndpoint::AnyLexical, RankEndpoint::Type(SubtreeDeletion)),
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (hi, lo) in &self.ranking_pairs {
            if *lo == RankEndpoint::Equivalent {
                return Err("the lower member of a ranked pair must be divergent".into());
            }
            if hi.granularity() >= lo.granularity() {
                return Err(format!("{hi} is not finer-grained than {lo}"));
            }
        }
        if self.max_ngram < 2 {
            return Err("max_ngram must be at least 2".into());
        }
        Ok(())
    }
}

/// The finer-grained member of a contrastive item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub pair: SentencePair,
    /// `None` for the seed equivalent.
    pub dtype: Option<DivergenceType>,
    pub labels: PairLabels,
}

impl Instance {
    pub fn equivalent(pair: &SentencePair) -> Self {
        Instance {
            labels: PairLabels::all_eq(pair.src_tokens.len(), pair.tgt_tokens.len()),
            pair: pair.clone(),
            dtype: None,
        }
    }

    pub fn divergent(ex: &DivergentExample) -> Self {
        Instance {
            pair: ex.pair.clone(),
            dtype: Some(ex.dtype),
            labels: ex.labels.clone(),
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.dtype.map_or(Granularity::Equivalent, |t| t.granularity())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRelation {
    pub higher: Granularity,
    pub lower: Granularity,
}

/// An ordered pair x > y, with the token labels z of y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveItem {
    pub x: Instance,
    pub y: SentencePair,
    pub z: PairLabels,
    pub dtype: DivergenceType,
    pub seed_id: String,
    pub rank_relation: RankRelation,
}

impl ContrastiveItem {
    pub fn new(x: Instance, y: &DivergentExample) -> Self {
        ContrastiveItem {
            rank_relation: RankRelation {
                higher: x.granularity(),
                lower: y.dtype.granularity(),
            },
            x,
            y: y.pair.clone(),
            z: y.labels.clone(),
            dtype: y.dtype,
            seed_id: y.seed_id.clone(),
        }
    }

    pub fn lower(&self) -> DivergentExample {
        DivergentExample {
            pair: self.y.clone(),
            dtype: self.dtype,
            labels: self.z.clone(),
            seed_id: self.seed_id.clone(),
        }
    }

    /// True when x is strictly finer-grained than y.
    pub fn is_ordered(&self) -> bool {
        self.rank_relation.higher == self.x.granularity()
            && self.rank_relation.lower == self.dtype.granularity()
            && self.rank_relation.higher < self.rank_relation.lower
    }
}

pub struct Generators<'a> {
    pub pool: &'a DonorPool,
    pub lexicon: &'a dyn LexicalSource,
    pub lm: &'a dyn LmScorer,
    pub config: SynthConfig,
}

impl Generators<'_> {
    /// Runs one generator with the seed's dedicated random stream.
    pub fn generate(&self, seed: &Seed, dtype: DivergenceType, rng_seed: u64) -> Result<DivergentExample, SynthError> {
        let stream = 1 + DivergenceType::ALL.iter().position(|&t| t == dtype).unwrap() as u64;
        let mut rng = seed_rng(rng_seed, &seed.pair.id, stream);
        match dtype {
            DivergenceType::SubtreeDeletion => {
                let side = if rng.gen_bool(0.5) { Side::Src } else { Side::Tgt };
                subtree_deletion(seed, side, &mut rng).or_else(|_| subtree_deletion(seed, side.opposite(), &mut rng))
            }
            DivergenceType::PhraseReplacement => {
                let tries = self.config.phrase_max_tries;
                let side = if seed.tgt_upos.is_some() && rng.gen_bool(0.5) {
                    Side::Tgt
                } else {
                    Side::Src
                };
                phrase_replacement(seed, self.pool, side, tries, &mut rng).or_else(|e| {
                    if seed.tgt_upos.is_some() {
                        phrase_replacement(seed, self.pool, side.opposite(), tries, &mut rng)
                    } else {
                        Err(e)
                    }
                })
            }
            DivergenceType::LexicalSubstitutionGeneralize => {
                lexical_substitution(seed, self.lexicon, self.lm, Direction::Generalize, &mut rng)
            }
            DivergenceType::LexicalSubstitutionParticularize => {
                lexical_substitution(seed, self.lexicon, self.lm, Direction::Particularize, &mut rng)
            }
        }
    }
}

/// Deterministic per-seed random stream.
pub fn seed_rng(rng_seed: u64, seed_id: &str, stream: u64) -> ChaCha8Rng {
    // FNV-1a over the id, folded with the global seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h ^ rng_seed.rotate_left(17));
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedEdit {
    pub seed_id: String,
    pub dtype: Option<DivergenceType>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenerationLog {
    pub skipped: Vec<SkippedEdit>,
}

/// Assembles contrastive items from seeds under a sampling strategy. Seeds
/// whose generator fails are skipped for that item and recorded in the log.
pub fn build_contrastive_set(
    seeds: &[Seed],
    strategy: SamplingStrategy,
    gens: &Generators<'_>,
    rng_seed: u64,
) -> (Vec<ContrastiveItem>, GenerationLog) {
    let mut items = Vec::new();
    let mut log = GenerationLog::default();
    for seed in seeds {
        if let Err(e) = seed.validate() {
            log.skipped.push(SkippedEdit {
                seed_id: seed.pair.id.clone(),
                dtype: None,
                reason: e.to_string(),
            });
            continue;
        }
        let mut cache: HashMap<DivergenceType, Result<DivergentExample, SynthError>> = HashMap::new();
        let mut get = |t: DivergenceType| -> Result<DivergentExample, SynthError> {
            cache.entry(t).or_insert_with(|| gens.generate(seed, t, rng_seed)).clone()
        };
        let mut choice = seed_rng(rng_seed, &seed.pair.id, 0);
        let equivalent = Instance::equivalent(&seed.pair);

        let mut emit = |x: Instance, y: Result<DivergentExample, SynthError>, log: &mut GenerationLog| match y {
            Ok(y) => items.push(ContrastiveItem::new(x, &y)),
            Err(e) => skip(log, seed, e),
        };
        match strategy {
            SamplingStrategy::SingleType(t) => emit(equivalent, get(t), &mut log),
            SamplingStrategy::Balanced => {
                let t = DivergenceType::ALL[choice.gen_range(0..4)];
                emit(equivalent, get(t), &mut log)
            }
            SamplingStrategy::Concatenation => {
                for t in DivergenceType::ALL {
                    emit(equivalent.clone(), get(t), &mut log);
                }
            }
            SamplingStrategy::DivergenceRanking => {
                for (hi, lo) in gens.config.ranking_pairs.clone() {
                    let x = resolve(hi, &equivalent, &mut get, &mut choice);
                    let y = resolve(lo, &equivalent, &mut get, &mut choice).map(|i| DivergentExample {
                        dtype: i.dtype.expect("lower endpoint is divergent"),
                        pair: i.pair,
                        labels: i.labels,
                        seed_id: seed.pair.id.clone(),
                    });
                    match x {
                        Ok(x) => emit(x, y, &mut log),
                        Err(e) => skip(&mut log, seed, e),
                    }
                }
            }
        }
    }
    (items, log)
}

fn resolve(
    endpoint: RankEndpoint,
    equivalent: &Instance,
    get: &mut impl FnMut(DivergenceType) -> Result<DivergentExample, SynthError>,
    choice: &mut ChaCha8Rng,
) -> Result<Instance, SynthError> {
    match endpoint {
        RankEndpoint::Equivalent => Ok(equivalent.clone()),
        RankEndpoint::Type(t) => get(t).map(|ex| Instance::divergent(&ex)),
        RankEndpoint::AnyLexical => {
            let general = get(DivergenceType::LexicalSubstitutionGeneralize);
            let special = get(DivergenceType::LexicalSubstitutionParticularize);
            match (general, special) {
                (Ok(g), Ok(p)) => Ok(Instance::divergent(if choice.gen_bool(0.5) { &g } else { &p })),
                (Ok(one), Err(_)) | (Err(_), Ok(one)) => Ok(Instance::divergent(&one)),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

fn skip(log: &mut GenerationLog, seed: &Seed, e: SynthError) {
    let dtype = match &e {
        SynthError::NoEligibleEdit { dtype, .. } => Some(*dtype),
        _ => None,
    };
    log::debug!("seed {}: {e}", seed.pair.id);
    log.skipped.push(SkippedEdit {
        seed_id: seed.pair.id.clone(),
        dtype,
        reason: e.to_string(),
    });
}

pub fn write_items_jsonl(items: &[ContrastiveItem]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("item serializes"));
        out.push('\n');
    }
    out
}

pub fn read_items_jsonl(text: &str) -> Result<Vec<ContrastiveItem>, SynthError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SynthError::Format {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}
