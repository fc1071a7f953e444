use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Encoded, Vocab};
use super::ScorerError;
use crate::corpus::SentencePair;
use crate::labels::{PairLabels, SentenceLabel, TokenLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Embedding width.
    pub d: usize,
    /// Hidden width of both heads.
    pub h: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { d: 64, h: 128 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub vocab: usize,
    pub dims: Dims,
}

impl Layout {
    fn sizes(&self) -> [usize; 9] {
        let Dims { d, h } = self.dims;
        [self.vocab * d, h * 2 * d, h, h, 1, h * (d + 1), h, 2 * h, 2]
    }

    fn range(&self, k: usize) -> Range<usize> {
        let s = self.sizes();
        let start: usize = s[..k].iter().sum();
        start..start + s[k]
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// Embedding table, `vocab × d`.
    pub fn emb(&self) -> Range<usize> {
        self.range(0)
    }
    /// Sentence head first layer, `h × 2d`.
    pub fn w1(&self) -> Range<usize> {
        self.range(1)
    }
    pub fn b1(&self) -> Range<usize> {
        self.range(2)
    }
    pub fn w2(&self) -> Range<usize> {
        self.range(3)
    }
    pub fn b2(&self) -> usize {
        self.range(4).start
    }
    /// Token head first layer, `h × (d + 1)`.
    pub fn u1(&self) -> Range<usize> {
        self.range(5)
    }
    pub fn c1(&self) -> Range<usize> {
        self.range(6)
    }
    /// Token head output layer, `2 × h`.
    pub fn u2(&self) -> Range<usize> {
        self.range(7)
    }
    pub fn c2(&self) -> Range<usize> {
        self.range(8)
    }

    pub fn emb_row(&self, id: usize) -> Range<usize> {
        let d = self.dims.d;
        self.emb().start + id * d..self.emb().start + (id + 1) * d
    }

    pub fn names(&self) -> [(&'static str, Range<usize>); 9] {
        let b2 = self.b2();
        [
            ("emb", self.emb()),
            ("w1", self.w1()),
            ("b1", self.b1()),
            ("w2", self.w2()),
            ("b2", b2..b2 + 1),
            ("u1", self.u1()),
            ("c1", self.c1()),
            ("u2", self.u2()),
            ("c2", self.c2()),
        ]
    }
}

/// Trainable sentence-pair scorer: mean-pooled embeddings per side feed a
/// two-layer sentence head; each unit's embedding plus a side flag feeds a
/// two-layer, two-class token head.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    pub vocab: Vocab,
    pub dims: Dims,
    pub activation: Activation,
    pub theta: Vec<f64>,
}

/// Token-head class order: index 0 is EQ, index 1 is DIV.
pub type Logits = [f64; 2];

/// An encoded pair ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub src: Encoded,
    pub tgt: Encoded,
}

impl EncodedPair {
    pub fn new(vocab: &Vocab, pair: &SentencePair) -> Self {
        EncodedPair {
            src: vocab.encode(&pair.src_tokens),
            tgt: vocab.encode(&pair.tgt_tokens),
        }
    }

    pub fn units(&self) -> usize {
        self.src.ids.len() + self.tgt.ids.len()
    }
}

pub(crate) struct SentenceCache {
    x: Vec<f64>,
    hid: Vec<f64>,
    pub score: f64,
}

pub(crate) struct TokenCache {
    id: usize,
    flag: f64,
    q: Vec<f64>,
    pub logits: Logits,
}

impl ScorerParams {
    pub fn layout(&self) -> Layout {
        Layout {
            vocab: self.vocab.len(),
            dims: self.dims,
        }
    }

    pub fn zeros(vocab: Vocab, dims: Dims, activation: Activation) -> Self {
        let n = Layout { vocab: vocab.len(), dims }.total();
        ScorerParams {
            vocab,
            dims,
            activation,
            theta: vec![0.0; n],
        }
    }

    /// Uniform Glorot-style initialization; biases start at zero.
    pub fn init<R: Rng>(vocab: Vocab, dims: Dims, activation: Activation, rng: &mut R) -> Self {
        let mut p = ScorerParams::zeros(vocab, dims, activation);
        let l = p.layout();
        let Dims { d, h } = dims;
        let mut fill = |r: Range<usize>, a: f64| {
            for v in &mut p.theta[r] {
                *v = rng.gen_range(-a..a);
            }
        };
        fill(l.emb(), 0.5);
        fill(l.w1(), (6.0 / (2 * d + h) as f64).sqrt());
        fill(l.w2(), (6.0 / (h + 1) as f64).sqrt());
        fill(l.u1(), (6.0 / (d + 1 + h) as f64).sqrt());
        fill(l.u2(), (6.0 / (h + 2) as f64).sqrt());
        p
    }

    pub fn encode(&self, pair: &SentencePair) -> EncodedPair {
        EncodedPair::new(&self.vocab, pair)
    }

    fn check(&self, pair: &EncodedPair) -> Result<(), ScorerError> {
        if pair.src.ids.is_empty() || pair.tgt.ids.is_empty() {
            return Err(ScorerError::EmptySide);
        }
        Ok(())
    }

    pub(crate) fn sentence_forward(&self, pair: &EncodedPair) -> Result<SentenceCache, ScorerError> {
        self.check(pair)?;
        let l = self.layout();
        let Dims { d, h } = self.dims;
        let t = &self.theta;
        let mut x = vec![0.0; 2 * d];
        for (half, ids) in [&pair.src.ids, &pair.tgt.ids].into_iter().enumerate() {
            let inv = 1.0 / ids.len() as f64;
            let out = &mut x[half * d..(half + 1) * d];
            for &id in ids {
                for (o, e) in out.iter_mut().zip(&t[l.emb_row(id)]) {
                    *o += e * inv;
                }
            }
        }
        let w1 = &t[l.w1()];
        let b1 = &t[l.b1()];
        let w2 = &t[l.w2()];
        let mut hid = vec![0.0; h];
        let mut score = t[l.b2()];
        for j in 0..h {
            let row = &w1[j * 2 * d..(j + 1) * 2 * d];
            let a = b1[j] + dot(row, &x);
            hid[j] = self.activation.apply(a);
            score += w2[j] * hid[j];
        }
        Ok(SentenceCache { x, hid, score })
    }

    pub(crate) fn sentence_backward(&self, pair: &EncodedPair, cache: &SentenceCache, d_score: f64, grad: &mut [f64]) {
        if d_score == 0.0 {
            return;
        }
        let l = self.layout();
        let Dims { d, h } = self.dims;
        let t = &self.theta;
        grad[l.b2()] += d_score;
        let mut dx = vec![0.0; 2 * d];
        let (w1s, w2s, b1s) = (l.w1().start, l.w2().start, l.b1().start);
        for j in 0..h {
            grad[w2s + j] += d_score * cache.hid[j];
            let da = d_score * t[w2s + j] * self.activation.grad_from_output(cache.hid[j]);
            if da == 0.0 {
                continue;
            }
            grad[b1s + j] += da;
            let off = w1s + j * 2 * d;
            for k in 0..2 * d {
                grad[off + k] += da * cache.x[k];
                dx[k] += da * t[off + k];
            }
        }
        for (half, ids) in [&pair.src.ids, &pair.tgt.ids].into_iter().enumerate() {
            let inv = 1.0 / ids.len() as f64;
            let dm = &dx[half * d..(half + 1) * d];
            for &id in ids {
                for (g, v) in grad[l.emb_row(id)].iter_mut().zip(dm) {
                    *g += v * inv;
                }
            }
        }
    }

    fn token_forward(&self, id: usize, flag: f64) -> TokenCache {
        let l = self.layout();
        let Dims { d, h } = self.dims;
        let t = &self.theta;
        let e = &t[l.emb_row(id)];
        let u1 = &t[l.u1()];
        let c1 = &t[l.c1()];
        let u2 = &t[l.u2()];
        let c2 = &t[l.c2()];
        let mut q = vec![0.0; h];
        let mut logits = [c2[0], c2[1]];
        for j in 0..h {
            let row = &u1[j * (d + 1)..(j + 1) * (d + 1)];
            let g = c1[j] + dot(&row[..d], e) + row[d] * flag;
            q[j] = self.activation.apply(g);
            logits[0] += u2[j] * q[j];
            logits[1] += u2[h + j] * q[j];
        }
        TokenCache { id, flag, q, logits }
    }

    /// Token caches for every unit, source side first.
    pub(crate) fn tokens_forward(&self, pair: &EncodedPair) -> Result<Vec<TokenCache>, ScorerError> {
        self.check(pair)?;
        let src = pair.src.ids.iter().map(|&id| self.token_forward(id, 1.0));
        let tgt = pair.tgt.ids.iter().map(|&id| self.token_forward(id, -1.0));
        Ok(src.chain(tgt).collect())
    }

    pub(crate) fn token_backward(&self, cache: &TokenCache, d_logits: Logits, grad: &mut [f64]) {
        let l = self.layout();
        let Dims { d, h } = self.dims;
        let t = &self.theta;
        let (u1s, c1s, u2s, c2s) = (l.u1().start, l.c1().start, l.u2().start, l.c2().start);
        grad[c2s] += d_logits[0];
        grad[c2s + 1] += d_logits[1];
        let e = l.emb_row(cache.id);
        let mut de = vec![0.0; d];
        for j in 0..h {
            grad[u2s + j] += d_logits[0] * cache.q[j];
            grad[u2s + h + j] += d_logits[1] * cache.q[j];
            let dq = d_logits[0] * t[u2s + j] + d_logits[1] * t[u2s + h + j];
            let dg = dq * self.activation.grad_from_output(cache.q[j]);
            if dg == 0.0 {
                continue;
            }
            grad[c1s + j] += dg;
            let off = u1s + j * (d + 1);
            for k in 0..d {
                grad[off + k] += dg * t[e.start + k];
                de[k] += dg * t[off + k];
            }
            grad[off + d] += dg * cache.flag;
        }
        for (g, v) in grad[e].iter_mut().zip(&de) {
            *g += v;
        }
    }

    pub fn score_encoded(&self, pair: &EncodedPair) -> Result<f64, ScorerError> {
        Ok(self.sentence_forward(pair)?.score)
    }

    /// Sentence score and per-unit token logits (source units, then target).
    pub fn forward(&self, pair: &SentencePair) -> Result<(f64, Vec<Logits>, Vec<Logits>), ScorerError> {
        let enc = self.encode(pair);
        let score = self.score_encoded(&enc)?;
        let toks = self.tokens_forward(&enc)?;
        let n = enc.src.ids.len();
        let logits: Vec<Logits> = toks.iter().map(|c| c.logits).collect();
        Ok((score, logits[..n].to_vec(), logits[n..].to_vec()))
    }

    pub fn predict(&self, pair: &SentencePair, threshold: f64) -> Result<Prediction, ScorerError> {
        DivergenceModel::predict(self, pair, threshold)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Word labels from unit logits: a word is DIV when any of its units is.
pub fn word_labels(logits: &[Logits], enc: &Encoded) -> Vec<TokenLabel> {
    let mut out = vec![TokenLabel::Eq; enc.words];
    for (lg, &w) in logits.iter().zip(&enc.word_of) {
        if lg[1] > lg[0] {
            out[w] = TokenLabel::Div;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub p_equivalent: f64,
    pub sentence_label: SentenceLabel,
    pub src_token_labels: Vec<TokenLabel>,
    pub tgt_token_labels: Vec<TokenLabel>,
}

impl Prediction {
    pub fn token_labels(&self) -> PairLabels {
        PairLabels {
            src: self.src_token_labels.clone(),
            tgt: self.tgt_token_labels.clone(),
        }
    }
}

/// Anything that scores a pair and tags its words. The built-in scorer
/// implements it; an external encoder can be plugged in the same way.
pub trait DivergenceModel: Send + Sync {
    fn score(&self, pair: &SentencePair) -> Result<f64, ScorerError>;

    fn token_labels(&self, pair: &SentencePair) -> Result<PairLabels, ScorerError>;

    /// Equivalent iff the logistic of the score is strictly above the
    /// threshold.
    fn predict(&self, pair: &SentencePair, threshold: f64) -> Result<Prediction, ScorerError> {
        let score = self.score(pair)?;
        let labels = self.token_labels(pair)?;
        let p = sigmoid(score);
        Ok(Prediction {
            score,
            p_equivalent: p,
            sentence_label: if p > threshold {
                SentenceLabel::Equivalent
            } else {
                SentenceLabel::Divergent
            },
            src_token_labels: labels.src,
            tgt_token_labels: labels.tgt,
        })
    }
}

impl DivergenceModel for ScorerParams {
    fn score(&self, pair: &SentencePair) -> Result<f64, ScorerError> {
        self.score_encoded(&self.encode(pair))
    }

    fn token_labels(&self, pair: &SentencePair) -> Result<PairLabels, ScorerError> {
        let enc = self.encode(pair);
        let toks = self.tokens_forward(&enc)?;
        let n = enc.src.ids.len();
        let logits: Vec<Logits> = toks.iter().map(|c| c.logits).collect();
        Ok(PairLabels {
            src: word_labels(&logits[..n], &enc.src),
            tgt: word_labels(&logits[n..], &enc.tgt),
        })
    }
}
