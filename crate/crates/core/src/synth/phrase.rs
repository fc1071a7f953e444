use std::collections::HashMap;

use rand::Rng;

use super::{no_edit, DivergenceType, DivergentExample, Seed, SynthError};
use crate::corpus::{SentencePair, Side};
use crate::labels::{PairLabels, TokenLabel};

const DTYPE: DivergenceType = DivergenceType::PhraseReplacement;

#[derive(Debug, Default)]
struct SidePool {
    ids: Vec<String>,
    tokens: Vec<Vec<String>>,
    /// POS n-gram (interned) -> (sentence, start) occurrences.
    index: HashMap<Vec<u16>, Vec<(u32, u16)>>,
}

/// POS-n-gram index over donor sentences, one per side. Built once and then
/// shared read-only.
#[derive(Debug)]
pub struct DonorPool {
    max_ngram: usize,
    tags: HashMap<String, u16>,
    sides: [SidePool; 2],
}

fn slot(side: Side) -> usize {
    match side {
        Side::Src => 0,
        Side::Tgt => 1,
    }
}

impl DonorPool {
    pub fn new(max_ngram: usize) -> Self {
        DonorPool {
            max_ngram: max_ngram.max(2),
            tags: HashMap::new(),
            sides: Default::default(),
        }
    }

    /// Indexes the seeds' sides that carry POS tags.
    pub fn from_seeds(seeds: &[Seed], max_ngram: usize) -> Self {
        let mut pool = DonorPool::new(max_ngram);
        for s in seeds {
            for side in [Side::Src, Side::Tgt] {
                if let Some(upos) = s.upos(side) {
                    pool.add(side, &s.pair.id, s.pair.tokens(side), upos);
                }
            }
        }
        pool
    }

    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    pub fn add(&mut self, side: Side, id: &str, tokens: &[String], upos: &[String]) {
        assert_eq!(tokens.len(), upos.len(), "donor {id}: tokens and tags differ in length");
        let ids: Vec<u16> = upos
            .iter()
            .map(|t| {
                let next = self.tags.len() as u16;
                *self.tags.entry(t.clone()).or_insert(next)
            })
            .collect();
        let pool = &mut self.sides[slot(side)];
        let sent = pool.tokens.len() as u32;
        pool.ids.push(id.to_string());
        pool.tokens.push(tokens.to_vec());
        for len in 2..=self.max_ngram.min(ids.len()) {
            for start in 0..=ids.len() - len {
                pool.index
                    .entry(ids[start..start + len].to_vec())
                    .or_default()
                    .push((sent, start as u16));
            }
        }
    }

    fn encode(&self, sig: &[String]) -> Option<Vec<u16>> {
        sig.iter().map(|t| self.tags.get(t).copied()).collect()
    }

    /// Donor token sequences whose POS tags equal `sig`, with donor ids.
    pub fn lookup(&self, side: Side, sig: &[String]) -> Vec<(&str, &[String])> {
        let pool = &self.sides[slot(side)];
        let Some(key) = self.encode(sig) else {
            return Vec::new();
        };
        pool.index
            .get(&key)
            .map(|occ| {
                occ.iter()
                    .map(|&(s, st)| {
                        let st = st as usize;
                        (
                            pool.ids[s as usize].as_str(),
                            &pool.tokens[s as usize][st..st + sig.len()],
                        )
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Replaces a random span of length 2..=⌈n/2⌉ on `side` with a donor span
/// of identical POS tags but different surface form, taken from another
/// sentence.
pub fn phrase_replacement<R: Rng>(
    seed: &Seed,
    pool: &DonorPool,
    side: Side,
    max_tries: usize,
    rng: &mut R,
) -> Result<DivergentExample, SynthError> {
    let upos = seed
        .upos(side)
        .ok_or_else(|| no_edit(DTYPE, format!("no POS tags for the {side:?} side")))?;
    let tokens = seed.pair.tokens(side);
    let n = tokens.len();
    let max_len = n.div_ceil(2).min(pool.max_ngram());
    if max_len < 2 {
        return Err(no_edit(DTYPE, "sentence too short for a two-token span"));
    }
    for _ in 0..max_tries {
        let len = rng.gen_range(2..=max_len);
        let start = rng.gen_range(0..=n - len);
        let original = &tokens[start..start + len];
        let cands = pool.lookup(side, &upos[start..start + len]);
        if cands.is_empty() {
            continue;
        }
        let offset = rng.gen_range(0..cands.len());
        let donor = (0..cands.len())
            .map(|k| cands[(offset + k) % cands.len()])
            .find(|(id, span)| *id != seed.pair.id && *span != original);
        if let Some((_, span)) = donor {
            return Ok(apply_replacement(seed, side, start, span));
        }
    }
    Err(no_edit(
        DTYPE,
        format!("no distinct POS-matched donor after {max_tries} tries"),
    ))
}

/// Writes `replacement` over `side[start..]` and labels the new span plus
/// the opposite-side tokens aligned to the replaced positions.
pub fn apply_replacement(seed: &Seed, side: Side, start: usize, replacement: &[String]) -> DivergentExample {
    let span: Vec<usize> = (start..start + replacement.len()).collect();
    let mut edited = seed.pair.tokens(side).to_vec();
    edited[start..start + replacement.len()].clone_from_slice(replacement);
    let in_span = |i: usize| TokenLabel::from_div(i >= start && i < start + replacement.len());
    let (src, tgt, labels) = match side {
        Side::Src => {
            let aligned = seed.alignment.tgt_of(&span);
            let labels = PairLabels {
                src: (0..edited.len()).map(in_span).collect(),
                tgt: (0..seed.pair.tgt_tokens.len())
                    .map(|t| TokenLabel::from_div(aligned.contains(&t)))
                    .collect(),
            };
            (edited, seed.pair.tgt_tokens.clone(), labels)
        }
        Side::Tgt => {
            let aligned = seed.alignment.src_of(&span);
            let labels = PairLabels {
                src: (0..seed.pair.src_tokens.len())
                    .map(|s| TokenLabel::from_div(aligned.contains(&s)))
                    .collect(),
                tgt: (0..edited.len()).map(in_span).collect(),
            };
            (seed.pair.src_tokens.clone(), edited, labels)
        }
    };
    DivergentExample {
        pair: SentencePair::from_tokens(format!("{}#pr", seed.pair.id), src, tgt),
        dtype: DTYPE,
        labels,
        seed_id: seed.pair.id.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Alignment, ConlluSentence, DependencyTree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn seed(id: &str, src: &str, upos: &str, tgt: &str) -> Seed {
        let src = toks(src);
        let upos = toks(upos);
        let n = src.len();
        let mut heads = vec![1; n];
        heads[0] = 0;
        let tgt = toks(tgt);
        let links: Vec<_> = (0..n.min(tgt.len())).map(|i| (i, i)).collect();
        Seed {
            src_parse: ConlluSentence {
                forms: src.clone(),
                lemmas: vec!["_".into(); n],
                deprels: vec!["_".into(); n],
                tree: DependencyTree::new(heads, upos).unwrap(),
            },
            pair: SentencePair::from_tokens(id, src, tgt),
            tgt_upos: None,
            alignment: Alignment::new(links),
        }
    }

    #[test]
    fn table_row_replacement() {
        let s = seed(
            "s",
            "one of them is suddenly asking your help , and",
            "NUM ADP PRON AUX ADV VERB PRON NOUN PUNCT CCONJ",
            "l' un d' eux vient soudainement demander votre aide et",
        );
        let s = Seed {
            alignment: Alignment::new([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (9, 9)]),
            ..s
        };
        let ex = apply_replacement(&s, Side::Src, 4, &toks("absolutely fighting his policy"));
        assert_eq!(ex.pair.src_raw, "one of them is absolutely fighting his policy , and");
        let src_div: Vec<usize> = (0..10).filter(|&i| ex.labels.src[i].is_div()).collect();
        assert_eq!(src_div, vec![4, 5, 6, 7]);
        let tgt_div: Vec<&str> = ex
            .labels
            .tgt
            .iter()
            .zip(&ex.pair.tgt_tokens)
            .filter(|(l, _)| l.is_div())
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(tgt_div, vec!["soudainement", "demander", "votre", "aide"]);
    }

    #[test]
    fn seed_alone_has_no_donor() {
        let s = seed("a", "the dog saw the cat", "DET NOUN VERB DET NOUN", "le chien a vu le chat");
        let pool = DonorPool::from_seeds(std::slice::from_ref(&s), 8);
        let r = phrase_replacement(&s, &pool, Side::Src, 50, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(matches!(r, Err(SynthError::NoEligibleEdit { .. })));
    }

    #[test]
    fn donor_used_when_distinct() {
        let a = seed("a", "the dog saw the cat", "DET NOUN VERB DET NOUN", "le chien a vu le chat");
        let b = seed("b", "a bird ate a worm", "DET NOUN VERB DET NOUN", "un oiseau a mangé un ver");
        let pool = DonorPool::from_seeds(&[a.clone(), b], 8);
        let ex = phrase_replacement(&a, &pool, Side::Src, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(ex.pair.src_tokens.len(), 5);
        assert_ne!(ex.pair.src_tokens, a.pair.src_tokens);
        assert!(ex.labels.src.iter().any(|l| l.is_div()));
    }

    #[test]
    fn missing_target_tags() {
        let a = seed("a", "the dog saw the cat", "DET NOUN VERB DET NOUN", "le chien a vu le chat");
        let pool = DonorPool::from_seeds(std::slice::from_ref(&a), 8);
        assert!(phrase_replacement(&a, &pool, Side::Tgt, 5, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
