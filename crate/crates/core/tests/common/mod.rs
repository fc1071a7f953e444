#![allow(dead_code)]

//! Brute-force reference implementations and generators of random small
//! instances, shared by the integration and acceptance tests.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semdiv_core::corpus::Side;
use semdiv_core::labels::{PairLabels, TokenLabel};
use semdiv_core::metrics::{
    aggregate_rationales, classification_report, krippendorff_alpha, span_macro_f1, token_f1, AggregationMode, Span,
    SpanLabel, SpanSet,
};
use semdiv_core::synth::{
    DivergenceType, DivergentExample, LexicalResource, LexicalSource, Seed, UnigramScorer, CONTENT_POS,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- instances

pub fn random_spans<R: Rng>(rng: &mut R, len: usize, max_spans: usize) -> Vec<Span> {
    let labels = [SpanLabel::Added, SpanLabel::Changed, SpanLabel::Other];
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    let k = rng.gen_range(0..=max_spans.min(len));
    while cuts.len() < 2 * k && len > 0 {
        cuts.insert(rng.gen_range(0..=len));
        if cuts.len() > len {
            break;
        }
    }
    let cuts: Vec<usize> = cuts.into_iter().collect();
    cuts.chunks(2)
        .filter(|c| c.len() == 2 && c[0] < c[1])
        .map(|c| Span::new(c[0], c[1], labels[rng.gen_range(0..3)]))
        .collect()
}

pub fn random_spanset<R: Rng>(rng: &mut R, src_len: usize, tgt_len: usize) -> SpanSet {
    SpanSet::new(random_spans(rng, src_len, 3), random_spans(rng, tgt_len, 3))
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize, p_div: f64) -> Vec<TokenLabel> {
    (0..n).map(|_| TokenLabel::from_div(rng.gen_bool(p_div))).collect()
}

pub fn random_ratings<R: Rng>(rng: &mut R) -> Vec<Vec<Option<u8>>> {
    let items = rng.gen_range(2..15);
    let raters = rng.gen_range(2..6);
    let k = rng.gen_range(2..5);
    (0..items)
        .map(|_| {
            (0..raters)
                .map(|_| (!rng.gen_bool(0.2)).then(|| rng.gen_range(0..k)))
                .collect()
        })
        .collect()
}

// ------------------------------------------------------------------ oracles

/// Nominal alpha from its definition as 1 - D_o / D_e, enumerating every
/// ordered pair of pairable values within units and across the whole table.
pub fn oracle_alpha(ratings: &[Vec<Option<u8>>]) -> Option<f64> {
    let units: Vec<Vec<u8>> = ratings
        .iter()
        .map(|r| r.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let pooled: Vec<u8> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mut d_o = 0.0;
    for u in &units {
        let mut dis = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j && u[i] != u[j] {
                    dis += 1.0;
                }
            }
        }
        d_o += dis / (u.len() - 1) as f64;
    }
    d_o /= n;
    let mut d_e = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j && pooled[i] != pooled[j] {
                d_e += 1.0;
            }
        }
    }
    d_e /= n * (n - 1.0);
    (d_e > 0.0).then(|| 1.0 - d_o / d_e)
}

fn overlap_iou(a: &Span, b: &Span) -> f64 {
    let a_set: BTreeSet<usize> = (a.start..a.end).collect();
    let b_set: BTreeSet<usize> = (b.start..b.end).collect();
    let union = a_set.union(&b_set).count();
    if union == 0 {
        0.0
    } else {
        a_set.intersection(&b_set).count() as f64 / union as f64
    }
}

/// Greedy one-to-one matching by repeatedly taking the best remaining pair
/// (ties: lowest predicted index, then lowest reference index).
pub fn oracle_greedy(reference: &[Span], predicted: &[Span], thr: f64) -> usize {
    let mut used_p = vec![false; predicted.len()];
    let mut used_r = vec![false; reference.len()];
    let mut matched = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, p) in predicted.iter().enumerate() {
            for (j, r) in reference.iter().enumerate() {
                if used_p[i] || used_r[j] {
                    continue;
                }
                let v = overlap_iou(p, r);
                if v > thr && best.is_none_or(|(b, _, _)| v > b) {
                    best = Some((v, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                used_p[i] = true;
                used_r[j] = true;
                matched += 1;
            }
            None => return matched,
        }
    }
}

/// Size of a maximum one-to-one matching, by exhaustive search.
pub fn oracle_max_matching(reference: &[Span], predicted: &[Span], thr: f64) -> usize {
    fn go(i: usize, p: &[Span], r: &[Span], used: &mut Vec<bool>, thr: f64) -> usize {
        if i == p.len() {
            return 0;
        }
        let mut best = go(i + 1, p, r, used, thr);
        for j in 0..r.len() {
            if !used[j] && overlap_iou(&p[i], &r[j]) > thr {
                used[j] = true;
                best = best.max(1 + go(i + 1, p, r, used, thr));
                used[j] = false;
            }
        }
        best
    }
    go(0, predicted, reference, &mut vec![false; reference.len()], thr)
}

pub fn oracle_span_f1(reference: &SpanSet, predicted: &SpanSet, thr: f64) -> f64 {
    let (nr, np) = (reference.src.len() + reference.tgt.len(), predicted.src.len() + predicted.tgt.len());
    if nr == 0 && np == 0 {
        return 1.0;
    }
    let m = oracle_greedy(&reference.src, &predicted.src, thr) + oracle_greedy(&reference.tgt, &predicted.tgt, thr);
    2.0 * m as f64 / (nr + np) as f64
}

/// (precision, recall, F1) of one class from a confusion count, with zero
/// denominators giving 0.
fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if 2 * tp + fp + fn_ == 0 || tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    (p, r, f)
}

/// Per-class (p, r, f1, support) from a confusion matrix.
pub fn oracle_report(gold: &[u8], pred: &[u8], labels: &[u8]) -> (Vec<(f64, f64, f64, usize)>, f64, f64) {
    let k = labels.len();
    let mut m = vec![vec![0usize; k]; k];
    let idx = |l: u8| labels.iter().position(|x| *x == l).unwrap();
    for (g, p) in gold.iter().zip(pred) {
        m[idx(*g)][idx(*p)] += 1;
    }
    let n = gold.len() as f64;
    let mut rows = Vec::new();
    let mut weighted = 0.0;
    for c in 0..k {
        let tp = m[c][c];
        let support: usize = m[c].iter().sum();
        let predicted: usize = (0..k).map(|r| m[r][c]).sum();
        let (p, r, f) = prf(tp, predicted - tp, support - tp);
        weighted += support as f64 / n * f;
        rows.push((p, r, f, support));
    }
    let acc = (0..k).map(|c| m[c][c]).sum::<usize>() as f64 / n;
    (rows, weighted, acc)
}

/// (f1_eq, f1_div, f1_mul)
pub fn oracle_token_f1(gold: &[TokenLabel], pred: &[TokenLabel]) -> (f64, f64, f64) {
    let mut c = [[0usize; 2]; 2];
    for (g, p) in gold.iter().zip(pred) {
        c[g.is_div() as usize][p.is_div() as usize] += 1;
    }
    let (_, _, f_eq) = prf(c[0][0], c[1][0], c[0][1]);
    let (_, _, f_div) = prf(c[1][1], c[0][1], c[1][0]);
    (f_eq, f_div, f_eq * f_div)
}

fn covers(set: &SpanSet, side: Side, t: usize) -> bool {
    set.side(side).iter().any(|s| s.start <= t && t < s.end)
}

/// Token gold straight from the definitions: union over annotators, union
/// over annotator pairs of their intersection, intersection over all.
pub fn oracle_aggregate(anns: &[SpanSet], src_len: usize, tgt_len: usize, mode: AggregationMode) -> PairLabels {
    let side_labels = |side: Side, len: usize| -> Vec<TokenLabel> {
        (0..len)
            .map(|t| {
                let c: Vec<bool> = anns.iter().map(|a| covers(a, side, t)).collect();
                let div = match mode {
                    AggregationMode::Union => c.iter().any(|x| *x),
                    AggregationMode::Intersection => c.iter().all(|x| *x),
                    AggregationMode::PairwiseUnion => {
                        (0..c.len()).any(|i| (i + 1..c.len()).any(|j| c[i] && c[j]))
                    }
                };
                TokenLabel::from_div(div)
            })
            .collect()
    };
    PairLabels {
        src: side_labels(Side::Src, src_len),
        tgt: side_labels(Side::Tgt, tgt_len),
    }
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub max_delta: f64,
}

/// Compares every metric against its oracle on `n` random instances each.
pub fn run_metric_oracles(n: usize, seed: u64) -> Vec<OracleOutcome> {
    let mut r = rng(seed);
    let mut out = Vec::new();

    let mut delta = 0.0f64;
    let mut count = 0;
    while count < n {
        let table = random_ratings(&mut r);
        let Some(want) = oracle_alpha(&table) else { continue };
        let got = krippendorff_alpha(&table).expect("alpha defined when the oracle is");
        delta = delta.max((got - want).abs());
        count += 1;
    }
    out.push(OracleOutcome {
        name: "krippendorff_alpha",
        instances: count,
        max_delta: delta,
    });

    let mut delta = 0.0f64;
    for _ in 0..n {
        let (sl, tl) = (r.gen_range(1..12), r.gen_range(1..12));
        let a = random_spanset(&mut r, sl, tl);
        let b = random_spanset(&mut r, sl, tl);
        let thr = [0.0, 0.25, 0.5, 0.75][r.gen_range(0..4)];
        delta = delta.max((span_macro_f1(&a, &b, thr) - oracle_span_f1(&a, &b, thr)).abs());
    }
    out.push(OracleOutcome {
        name: "span_macro_f1",
        instances: n,
        max_delta: delta,
    });

    let mut delta = 0.0f64;
    for _ in 0..n {
        let len = r.gen_range(1..40);
        let p = r.gen_range(0.0..1.0);
        let g = random_labels(&mut r, len, p);
        let q = random_labels(&mut r, len, p);
        let got = token_f1(&g, &q).unwrap();
        let (fe, fd, fm) = oracle_token_f1(&g, &q);
        delta = delta
            .max((got.f1_eq - fe).abs())
            .max((got.f1_div - fd).abs())
            .max((got.f1_mul - fm).abs());
    }
    out.push(OracleOutcome {
        name: "token_f1",
        instances: n,
        max_delta: delta,
    });

    let mut delta = 0.0f64;
    for _ in 0..n {
        let k = r.gen_range(1..5u8);
        let len = r.gen_range(1..40);
        let g: Vec<u8> = (0..len).map(|_| r.gen_range(0..k)).collect();
        let q: Vec<u8> = (0..len).map(|_| r.gen_range(0..k)).collect();
        let labels: Vec<u8> = g.iter().chain(&q).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let got = classification_report(&g, &q).unwrap();
        let (rows, weighted, acc) = oracle_report(&g, &q, &labels);
        delta = delta.max((got.weighted_f1 - weighted).abs()).max((got.accuracy - acc).abs());
        for (c, (p, rc, f, s)) in got.classes.iter().zip(rows) {
            assert_eq!(c.support, s);
            delta = delta
                .max((c.precision - p).abs())
                .max((c.recall - rc).abs())
                .max((c.f1 - f).abs());
        }
    }
    out.push(OracleOutcome {
        name: "classification_report",
        instances: n,
        max_delta: delta,
    });

    let mut delta = 0.0f64;
    for _ in 0..n {
        let (sl, tl) = (r.gen_range(1..12), r.gen_range(1..12));
        let anns: Vec<SpanSet> = (0..r.gen_range(2..5)).map(|_| random_spanset(&mut r, sl, tl)).collect();
        for mode in AggregationMode::ALL {
            let got = aggregate_rationales(&anns, sl, tl, mode).unwrap();
            if got != oracle_aggregate(&anns, sl, tl, mode) {
                delta = 1.0;
            }
        }
    }
    out.push(OracleOutcome {
        name: "aggregate_rationales",
        instances: n,
        max_delta: delta,
    });
    out
}

// ------------------------------------------------------ generation checks

fn subtree_of(heads: &[usize], h: usize) -> BTreeSet<usize> {
    // heads are 1-based with 0 for the root
    let mut set = BTreeSet::from([h]);
    loop {
        let before = set.len();
        for (i, &hd) in heads.iter().enumerate() {
            if hd > 0 && set.contains(&(hd - 1)) {
                set.insert(i);
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

fn aligned_tgt(seed: &Seed, src: &BTreeSet<usize>) -> BTreeSet<usize> {
    seed.alignment
        .links
        .iter()
        .filter(|(s, _)| src.contains(s))
        .map(|(_, t)| *t)
        .collect()
}

fn aligned_src(seed: &Seed, tgt: &BTreeSet<usize>) -> BTreeSet<usize> {
    seed.alignment
        .links
        .iter()
        .filter(|(_, t)| tgt.contains(t))
        .map(|(s, _)| *s)
        .collect()
}

fn remove(tokens: &[String], gone: &BTreeSet<usize>) -> Vec<String> {
    tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| !gone.contains(i))
        .map(|(_, t)| t.clone())
        .collect()
}

fn mask(len: usize, div: &BTreeSet<usize>) -> Vec<TokenLabel> {
    (0..len).map(|i| TokenLabel::from_div(div.contains(&i))).collect()
}

/// The example must be the deletion of some subtree that is not a single
/// leaf and spans fewer than ⌈n/2⌉ source tokens.
fn check_subtree(seed: &Seed, ex: &DivergentExample) -> Result<(), String> {
    let p = &seed.pair;
    let n = p.src_tokens.len();
    let heads = &seed.src_parse.tree.heads;
    for h in 0..n {
        let st = subtree_of(heads, h);
        if st.len() < 2 || st.len() >= n.div_ceil(2) {
            continue;
        }
        let tgt_gone = aligned_tgt(seed, &st);
        // source-side deletion
        if ex.pair.src_tokens == remove(&p.src_tokens, &st)
            && ex.pair.tgt_tokens == p.tgt_tokens
            && ex.labels.src.iter().all(|l| !l.is_div())
            && ex.labels.tgt == mask(p.tgt_tokens.len(), &tgt_gone)
        {
            return Ok(());
        }
        // target-side deletion
        if !tgt_gone.is_empty()
            && ex.pair.src_tokens == p.src_tokens
            && ex.pair.tgt_tokens == remove(&p.tgt_tokens, &tgt_gone)
            && ex.labels.tgt.iter().all(|l| !l.is_div())
            && ex.labels.src == mask(n, &aligned_src(seed, &tgt_gone))
        {
            return Ok(());
        }
    }
    Err("not the deletion of an eligible subtree".into())
}

/// The replaced span must have length 2..=⌈n/2⌉, come from a different
/// sentence with the identical POS sequence and differ in surface form.
fn check_phrase(seed: &Seed, ex: &DivergentExample, all: &[Seed]) -> Result<(), String> {
    let p = &seed.pair;
    let (side, orig, new) = if ex.pair.src_tokens != p.src_tokens {
        (Side::Src, &p.src_tokens, &ex.pair.src_tokens)
    } else {
        (Side::Tgt, &p.tgt_tokens, &ex.pair.tgt_tokens)
    };
    if orig.len() != new.len() {
        return Err("phrase replacement changed the length".into());
    }
    if side == Side::Src && ex.pair.tgt_tokens != p.tgt_tokens || side == Side::Tgt && ex.pair.src_tokens != p.src_tokens {
        return Err("both sides edited".into());
    }
    let upos = seed.upos(side).ok_or("edited side has no POS")?;
    let n = orig.len();
    for len in 2..=n.div_ceil(2) {
        for start in 0..=n - len {
            let span = start..start + len;
            if orig[..start] != new[..start] || orig[span.end..] != new[span.end..] || orig[span.clone()] == new[span.clone()] {
                continue;
            }
            let idx: BTreeSet<usize> = span.clone().collect();
            let (want_src, want_tgt) = match side {
                Side::Src => (mask(n, &idx), mask(p.tgt_tokens.len(), &aligned_tgt(seed, &idx))),
                Side::Tgt => (mask(p.src_tokens.len(), &aligned_src(seed, &idx)), mask(n, &idx)),
            };
            if ex.labels.src != want_src || ex.labels.tgt != want_tgt {
                continue;
            }
            let sig = &upos[span.clone()];
            let donor_found = all.iter().filter(|d| d.pair.id != p.id).any(|d| {
                let (Some(dpos), toks) = (d.upos(side), d.pair.tokens(side)) else {
                    return false;
                };
                (0..toks.len().saturating_sub(len - 1))
                    .any(|s| &dpos[s..s + len] == sig && toks[s..s + len] == new[span.clone()])
            });
            if donor_found {
                return Ok(());
            }
        }
    }
    Err("no POS-matched donor span explains the edit".into())
}

/// Exactly one content word replaced by its highest-frequency candidate.
fn check_lexical(
    seed: &Seed,
    ex: &DivergentExample,
    lex: &LexicalResource,
    lm: &UnigramScorer,
    dir: semdiv_core::synth::Direction,
) -> Result<(), String> {
    let p = &seed.pair;
    if ex.pair.tgt_tokens != p.tgt_tokens || ex.pair.src_tokens.len() != p.src_tokens.len() {
        return Err("lexical substitution must only swap one source word".into());
    }
    let diff: Vec<usize> = (0..p.src_tokens.len())
        .filter(|&i| p.src_tokens[i] != ex.pair.src_tokens[i])
        .collect();
    let [pos] = diff[..] else {
        return Err(format!("{} source words changed", diff.len()));
    };
    let upos = &seed.src_parse.tree.upos[pos];
    if !CONTENT_POS.contains(&upos.as_str()) {
        return Err(format!("substituted a {upos}"));
    }
    let lemma = seed.src_parse.lemma(pos);
    let form = p.src_tokens[pos].to_lowercase();
    let cands: Vec<&String> = lex
        .candidates(&lemma, upos, dir)
        .iter()
        .filter(|c| **c != lemma && **c != form)
        .collect();
    let chosen = ex.pair.src_tokens[pos].to_lowercase();
    if !cands.contains(&&chosen) {
        return Err(format!("{chosen} is not a candidate"));
    }
    let best = cands.iter().map(|c| lm.count(c)).max().unwrap();
    if lm.count(&chosen) != best {
        return Err(format!("{chosen} is not the most frequent candidate"));
    }
    let idx = BTreeSet::from([pos]);
    if ex.labels.src != mask(p.src_tokens.len(), &idx) || ex.labels.tgt != mask(p.tgt_tokens.len(), &aligned_tgt(seed, &idx)) {
        return Err("labels do not follow the alignment".into());
    }
    Ok(())
}

/// Checks the invariants shared by all types, then the type-specific replay.
pub fn check_example(
    seed: &Seed,
    ex: &DivergentExample,
    all: &[Seed],
    lex: &LexicalResource,
    lm: &UnigramScorer,
) -> Result<(), String> {
    if ex.labels.src.len() != ex.pair.src_tokens.len() || ex.labels.tgt.len() != ex.pair.tgt_tokens.len() {
        return Err("label lengths differ from token lengths".into());
    }
    if ex.labels.div_count() == 0 {
        return Err("no DIV label".into());
    }
    if ex.pair.src_tokens == seed.pair.src_tokens && ex.pair.tgt_tokens == seed.pair.tgt_tokens {
        return Err("example equals its seed".into());
    }
    if ex.seed_id != seed.pair.id {
        return Err("wrong seed id".into());
    }
    use semdiv_core::synth::Direction;
    match ex.dtype {
        DivergenceType::SubtreeDeletion => check_subtree(seed, ex),
        DivergenceType::PhraseReplacement => check_phrase(seed, ex, all),
        DivergenceType::LexicalSubstitutionGeneralize => check_lexical(seed, ex, lex, lm, Direction::Generalize),
        DivergenceType::LexicalSubstitutionParticularize => check_lexical(seed, ex, lex, lm, Direction::Particularize),
    }
}
